"""Named bodies: the built-in catalog, user catalog files and inline specs."""

import json

from .body import BODY_KINDS, CatalogEntry, make_body
from .errors import CatalogError

_ROUNDING = 0.25

BUILTIN = (
    CatalogEntry("ball", "ball", {"radius": 1.0}),
    CatalogEntry("ellipsoid", "ellipsoid", {"semiaxes": [2.0, 1.0]}),
    CatalogEntry("ellipse_a3", "ellipsoid", {"semiaxes": [3.0, 1.0]}),
    CatalogEntry("ellipse_a5", "ellipsoid", {"semiaxes": [5.0, 1.0]}),
    CatalogEntry("smoothed_cube", "smoothed_cube", {"q": 4, "rounding": _ROUNDING}),
    CatalogEntry("smoothed_cube_q2", "smoothed_cube", {"q": 2, "rounding": _ROUNDING}),
    CatalogEntry("smoothed_cube_q8", "smoothed_cube", {"q": 8, "rounding": _ROUNDING}),
    CatalogEntry(
        "perturbed_ball",
        "perturbed_ball",
        {"radius": 1.0, "amplitudes": [{"l": 2, "m": 2, "a": 0.1}, {"l": 4, "m": -4, "a": 0.02}]},
    ),
)


class Catalog:
    """Ordered name -> CatalogEntry mapping; names are unique."""

    def __init__(self, entries=BUILTIN):
        self._entries = {}
        for e in entries:
            self.add(e)

    def add(self, entry):
        if entry.name in self._entries:
            raise CatalogError(f"duplicate catalog name {entry.name!r}")
        self._entries[entry.name] = entry

    def merge_file(self, path):
        try:
            with open(path) as fh:
                data = json.load(fh)
        except OSError as exc:
            raise CatalogError(f"cannot read catalog file {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise CatalogError(f"catalog file {path} is not valid JSON: {exc}") from exc
        if isinstance(data, dict):
            data = data.get("bodies", data.get("catalog"))
        if not isinstance(data, list):
            raise CatalogError(f"catalog file {path} must hold a list of entries")
        for obj in data:
            self.add(CatalogEntry.from_json(obj))
        return self

    def __getitem__(self, name):
        try:
            return self._entries[name]
        except KeyError:
            raise CatalogError(f"unknown body {name!r}") from None

    def __contains__(self, name):
        return name in self._entries

    def __iter__(self):
        return iter(self._entries.values())

    def __len__(self):
        return len(self._entries)

    def names(self):
        return list(self._entries)

    def to_json(self):
        return [e.to_json() for e in self]

    def table(self):
        """Tab-separated ``name kind params`` lines, one per body."""
        return "\n".join(
            f"{e.name}\t{e.kind}\t{json.dumps(e.params, sort_keys=True)}" for e in self
        )

    def resolve(self, spec):
        """A catalog name or an inline ``kind:args`` spec -> CatalogEntry."""
        if isinstance(spec, dict):
            return CatalogEntry.from_json(spec)
        if ":" not in spec:
            return self[spec]
        return parse_inline(spec)

    def body(self, spec, dim, band_limit=None):
        return make_body(self.resolve(spec), band_limit=band_limit, dim=dim)


def _numbers(text, spec):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise CatalogError(f"inline body {spec!r}: arguments must be numbers") from None


def parse_inline(spec):
    """Inline body specs.

    ``ball:r``, ``ellipsoid:a,b[,c]``, ``smoothed_cube:q[,rounding]`` and
    ``perturbed_ball:l,m,a[;l,m,a...]``.
    """
    kind, _, args = spec.partition(":")
    if kind not in BODY_KINDS:
        raise CatalogError(f"inline body {spec!r}: unknown kind {kind!r}")
    if kind == "ball":
        vals = _numbers(args, spec)
        params = {"radius": vals[0]} if vals else {}
    elif kind == "ellipsoid":
        params = {"semiaxes": _numbers(args, spec)}
    elif kind == "smoothed_cube":
        vals = _numbers(args, spec)
        if not vals or vals[0] != int(vals[0]):
            raise CatalogError(f"inline body {spec!r}: first argument is the integer exponent q")
        params = {"q": int(vals[0]), "rounding": vals[1] if len(vals) > 1 else _ROUNDING}
    else:
        amps = []
        for group in args.split(";"):
            vals = _numbers(group, spec)
            if len(vals) != 3:
                raise CatalogError(f"inline body {spec!r}: modes are l,m,a triples")
            amps.append({"l": int(vals[0]), "m": int(vals[1]), "a": vals[2]})
        params = {"amplitudes": amps}
    return CatalogEntry(spec, kind, params)


def load_catalog(path=None):
    cat = Catalog()
    if path:
        cat.merge_file(path)
    return cat
