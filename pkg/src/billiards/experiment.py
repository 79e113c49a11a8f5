"""Experiment specs, result records and plot emission.

An experiment is described by an INI file::

    [manifold]
    kind = perturbed_circle
    epsilon = 0.02
    p = 5

    [search]
    p = 5
    starts = 500
    seed = 0

    [bounds]
    requested = torus

    [output]
    dir = results
    formats = json, csv, svg

Values are read as JSON when possible (``semi_axes = [1.0, 1.1, 1.2]``) and
as plain strings otherwise.  Every ``SearchConfig`` field may appear in
``[search]``.  ``[bounds]`` also takes ``betti`` (per-degree Betti numbers of
the manifold, used by ``cubic`` and ``smith``) and ``complex`` (a chain complex
file, used by ``morse``).
"""
from __future__ import annotations

import configparser
import dataclasses
import json
import math
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import catalog, homology
from .manifold import ParametricManifold, SphereLike, from_spec, to_spec
from .search import SearchConfig, SearchReport, find_trajectories

SCHEMA_VERSION = 1
BOUND_KINDS = ("morse", "torus", "s2_complex", "schubert", "cubic", "smith")
FORMATS = ("json", "csv", "svg")
OUT_ENV = "BILLIARDS_OUT"


class UsageError(ValueError):
    """Invalid configuration or command line; carries a location when known."""

    def __init__(self, message: str, source: Optional[str] = None, line: Optional[int] = None,
                 field: Optional[str] = None):
        where = ""
        if source:
            where = f"{source}:{line}: " if line else f"{source}: "
        if field:
            where += f"[{field}] "
        super().__init__(where + message)
        self.source, self.line, self.field = source, line, field


# ---------------------------------------------------------------------------
# Experiment spec
# ---------------------------------------------------------------------------


@dataclass
class ExperimentSpec:
    manifold: Optional[Dict[str, Any]] = None
    search: SearchConfig = field(default_factory=SearchConfig)
    bounds: Tuple[str, ...] = ()
    betti: Optional[Tuple[int, ...]] = None
    complex_path: Optional[str] = None
    out_dir: Optional[str] = None
    formats: Tuple[str, ...] = ("json",)

    def __post_init__(self):
        self.bounds = tuple(self.bounds)
        self.formats = tuple(self.formats)
        self.validate()

    @property
    def p(self) -> int:
        return self.search.p

    def build_manifold(self) -> Optional[ParametricManifold]:
        return None if self.manifold is None else from_spec(self.manifold)

    def validate(self) -> None:
        for b in self.bounds:
            if b not in BOUND_KINDS:
                raise UsageError(f"unknown bound {b!r}; choose from {', '.join(BOUND_KINDS)}", field="bounds")
        for f in self.formats:
            if f not in FORMATS:
                raise UsageError(f"unknown format {f!r}; choose from {', '.join(FORMATS)}", field="output")
        M = None
        if self.manifold is not None:
            try:
                M = self.build_manifold()
            except ValueError as exc:
                raise UsageError(str(exc), field="manifold") from None
        p = self.p
        if "torus" in self.bounds:
            if M is not None and M.intrinsic_dim != 1:
                raise UsageError("torus bound needs a closed curve (m = 1)", field="bounds")
            if p % 2 == 0 or not 3 <= p <= 9:
                raise UsageError("torus bound needs odd p with 3 <= p <= 9", field="bounds")
        if "s2_complex" in self.bounds:
            if p != 3 or (M is not None and M.intrinsic_dim != 2):
                raise UsageError("s2_complex bound is for p = 3 on a 2-sphere", field="bounds")
        if "schubert" in self.bounds:
            if M is not None and not isinstance(M, SphereLike):
                raise UsageError("schubert bound needs a sphere-like manifold", field="bounds")
            if M is None and self.betti is None:
                raise UsageError("schubert bound needs a manifold or betti = 1,0,...,0,1", field="bounds")
            if p % 2 == 0 or p < 3:
                raise UsageError("schubert bound needs odd p >= 3", field="bounds")
        if {"cubic", "smith"} & set(self.bounds):
            if p != 3:
                raise UsageError("cubic and smith bounds are for p = 3", field="bounds")
            if self.betti is None and not isinstance(M, SphereLike):
                raise UsageError("cubic and smith bounds need betti = ... or a sphere-like manifold", field="bounds")
        if "morse" in self.bounds and not self.complex_path:
            raise UsageError("morse bound needs complex = <path>", field="bounds")

    def manifold_betti(self) -> Tuple[int, ...]:
        """Mod-q Betti numbers of the manifold, explicit or from its topology."""
        if self.betti is not None:
            return self.betti
        M = self.build_manifold()
        if isinstance(M, SphereLike):
            return (1,) + (0,) * (M.intrinsic_dim - 1) + (1,)
        if M is not None and M.intrinsic_dim == 1:
            return (1, 1)
        raise UsageError("no Betti numbers available", field="bounds")


def _parse_value(raw: str) -> Any:
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        pass
    if "," in raw:
        return [_parse_value(v.strip()) for v in raw.split(",") if v.strip()]
    return raw.strip()


def _strings(value: Any) -> Tuple[str, ...]:
    if isinstance(value, str):
        return tuple(v.strip() for v in value.split(",") if v.strip())
    if isinstance(value, list):
        return tuple(str(v) for v in value)
    return (str(value),)


def _line_of(text: str, section: str, key: Optional[str] = None) -> Optional[int]:
    current = None
    for no, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        m = re.match(r"\[(.+)\]", s)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return no
            continue
        if current == section and key is not None and re.match(rf"{re.escape(key)}\s*[=:]", s):
            return no
    return None


_SECTIONS = {"manifold", "search", "bounds", "output"}
_BOUND_KEYS = {"requested", "betti", "complex"}
_OUTPUT_KEYS = {"dir", "formats"}
_SEARCH_FIELDS = {f.name: f for f in dataclasses.fields(SearchConfig)}


def _coerce_search(name: str, value: Any):
    kind = _SEARCH_FIELDS[name].type
    if value is None or (isinstance(value, str) and value.lower() == "none"):
        if "Optional" in str(kind):
            return None
        raise ValueError("value required")
    if "int" in str(kind) and "float" not in str(kind):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValueError(f"expected an integer, got {value!r}")
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"expected a number, got {value!r}")
    return float(value)


def parse_spec(text: str, source: str = "<config>") -> ExperimentSpec:
    """Parse INI text into a validated :class:`ExperimentSpec`."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise UsageError(str(exc).splitlines()[0], source, line) from None

    def fail(msg, section, key=None):
        raise UsageError(msg, source, _line_of(text, section, key), f"{section}.{key}" if key else section)

    for s in parser.sections():
        if s not in _SECTIONS:
            fail(f"unknown section; expected one of {sorted(_SECTIONS)}", s)

    manifold = None
    if parser.has_section("manifold"):
        manifold = {k: _parse_value(v) for k, v in parser["manifold"].items()}
        if "kind" not in manifold:
            fail("missing 'kind'", "manifold")
        try:
            from_spec(manifold)
        except ValueError as exc:
            bad = next((k for k in manifold if k in str(exc)), None)
            fail(str(exc), "manifold", bad)

    search_kw = {}
    if parser.has_section("search"):
        for k, raw in parser["search"].items():
            if k not in _SEARCH_FIELDS:
                fail(f"unknown option; expected one of {sorted(_SEARCH_FIELDS)}", "search", k)
            try:
                search_kw[k] = _coerce_search(k, _parse_value(raw))
            except ValueError as exc:
                fail(str(exc), "search", k)
    try:
        search = SearchConfig(**search_kw)
    except ValueError as exc:
        key = next((k for k in search_kw if k in str(exc)), None)
        fail(str(exc), "search", key)

    bounds, betti, complex_path = (), None, None
    if parser.has_section("bounds"):
        sec = parser["bounds"]
        for k in sec:
            if k not in _BOUND_KEYS:
                fail(f"unknown option; expected one of {sorted(_BOUND_KEYS)}", "bounds", k)
        bounds = _strings(_parse_value(sec.get("requested", "")) or "")
        if "betti" in sec:
            value = _parse_value(sec["betti"])
            value = value if isinstance(value, list) else [value]
            if not all(isinstance(v, int) and v >= 0 for v in value):
                fail("betti must be a list of non-negative integers", "bounds", "betti")
            betti = tuple(value)
        if "complex" in sec:
            complex_path = sec["complex"].strip()
            if not os.path.isabs(complex_path) and source not in ("<config>", "<string>"):
                complex_path = str(Path(source).parent / complex_path)

    out_dir, formats = None, ("json",)
    if parser.has_section("output"):
        sec = parser["output"]
        for k in sec:
            if k not in _OUTPUT_KEYS:
                fail(f"unknown option; expected one of {sorted(_OUTPUT_KEYS)}", "output", k)
        out_dir = sec.get("dir")
        if "formats" in sec:
            formats = _strings(sec["formats"])

    try:
        return ExperimentSpec(manifold=manifold, search=search, bounds=bounds, betti=betti,
                              complex_path=complex_path, out_dir=out_dir, formats=formats)
    except UsageError as exc:
        section = (exc.field or "").split(".")[0] or "bounds"
        raise UsageError(str(exc).split("] ", 1)[-1], source, _line_of(text, section), section) from None


def load_spec(path: str) -> ExperimentSpec:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config: {exc.strerror}", path) from None
    return parse_spec(text, source=str(path))


# ---------------------------------------------------------------------------
# Result records
# ---------------------------------------------------------------------------


@dataclass
class OrbitRecord:
    length: float
    morse_index: Optional[int]
    null_dim: int
    rotation_number: Optional[int]
    residual: float
    coordinates: List[List[float]]
    charts: List[int]
    ambient: List[List[float]]


@dataclass
class FamilyRecord:
    length: float
    null_dim: int
    members: int
    rotation_number: Optional[int]
    samples: int
    max_sample_residual: Optional[float]


@dataclass
class BoundCheck:
    name: str
    value: int
    count: Optional[int] = None
    passed: Optional[bool] = None
    note: str = ""


@dataclass
class ResultRecord:
    schema: int = SCHEMA_VERSION
    manifold: Optional[Dict[str, Any]] = None
    p: Optional[int] = None
    seed: Optional[int] = None
    starts: Optional[int] = None
    trajectory_count: Optional[int] = None
    family_count: Optional[int] = None
    orbits: List[OrbitRecord] = field(default_factory=list)
    families: List[FamilyRecord] = field(default_factory=list)
    bounds: List[BoundCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(b.passed is not False for b in self.bounds)

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "ResultRecord":
        d = dict(d)
        if d.get("schema") != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema {d.get('schema')!r}")
        d["orbits"] = [OrbitRecord(**o) for o in d.get("orbits", [])]
        d["families"] = [FamilyRecord(**f) for f in d.get("families", [])]
        d["bounds"] = [BoundCheck(**b) for b in d.get("bounds", [])]
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "ResultRecord":
        return cls.from_dict(json.loads(text))


def _orbit_record(rep) -> OrbitRecord:
    c = rep.config
    return OrbitRecord(
        length=float(rep.length), morse_index=rep.morse_index, null_dim=int(rep.null_dim),
        rotation_number=rep.rotation_number, residual=float(rep.residual_norm),
        coordinates=np.asarray(c.coords, dtype=float).tolist(),
        charts=[int(k) for k in c.charts],
        ambient=np.asarray(c.ambient, dtype=float).tolist(),
    )


def _family_record(fam) -> FamilyRecord:
    res = max(fam.sample_residuals) if fam.sample_residuals else None
    return FamilyRecord(
        length=float(fam.length), null_dim=int(fam.null_dim), members=len(fam.members),
        rotation_number=fam.rotation_number, samples=len(fam.samples),
        max_sample_residual=None if res is None else float(res),
    )


def compute_bound(name: str, spec: ExperimentSpec) -> Tuple[int, str]:
    """Value of one requested lower bound, with a short provenance note."""
    p = spec.p
    if name == "torus":
        profile = catalog.torus_quotient_profile(p)
        return homology.morse_lower_bound(profile), f"2 x {catalog.component_count(p)} torus components"
    if name == "s2_complex":
        B = homology.homology_dims(catalog.build_s2_triple_complex())
        return homology.morse_lower_bound(B), f"relative Betti numbers {list(B.dims)}"
    if name == "schubert":
        M = spec.build_manifold()
        n = M.intrinsic_dim if M is not None else len(spec.betti) - 1
        return catalog.schubert_bound(n, p), f"n(p-1) with n = {n}"
    if name == "cubic":
        B = sum(spec.manifold_betti())
        return homology.cubic_bound(B), f"B = {B}"
    if name == "smith":
        profile = homology.BettiProfile(spec.manifold_betti(), 3)
        return homology.smith_pipeline_bound(profile), f"per-degree ceilings on {list(profile.dims)}"
    if name == "morse":
        try:
            text = Path(spec.complex_path).read_text()
            C = homology.loads_complex(text)
        except OSError as exc:
            raise UsageError(f"cannot read complex: {exc.strerror}", spec.complex_path) from None
        except ValueError as exc:
            raise UsageError(str(exc), spec.complex_path) from None
        B = homology.homology_dims(C)
        return homology.morse_lower_bound(B), f"relative Betti numbers {list(B.dims)}"
    raise UsageError(f"unknown bound {name!r}", field="bounds")


def run(spec: ExperimentSpec, search: bool = True, out_dir: Optional[str] = None) -> ResultRecord:
    """Search (when a manifold is given), evaluate bounds and write outputs.

    ``out_dir`` overrides ``spec.out_dir``; pass ``""`` to skip writing files.
    """
    record = ResultRecord(p=spec.p, manifold=spec.manifold)
    report: Optional[SearchReport] = None
    if search and spec.manifold is not None:
        record.seed, record.starts = spec.search.seed, spec.search.starts
        report = find_trajectories(spec.build_manifold(), spec.search)
        record.trajectory_count = report.isolated_count
        record.family_count = len(report.families)
        record.orbits = [_orbit_record(r) for r in report.trajectories]
        record.families = [_family_record(f) for f in report.families]
    for name in spec.bounds:
        value, note = compute_bound(name, spec)
        check = BoundCheck(name=name, value=int(value), note=note)
        if record.trajectory_count is not None:
            check.count = record.trajectory_count
            check.passed = check.count >= check.value
        record.bounds.append(check)
    target = spec.out_dir if out_dir is None else out_dir
    if target:
        write_outputs(record, target, spec.formats)
    return record


def write_outputs(record: ResultRecord, out_dir: str, formats: Sequence[str]) -> List[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    if "json" in formats:
        path = out / "result.json"
        path.write_text(record.to_json())
        paths.append(path)
    if "csv" in formats or "svg" in formats:
        paths += emit_plot_data(record, out, with_svg="svg" in formats)
    return paths


# ---------------------------------------------------------------------------
# Plot data
# ---------------------------------------------------------------------------

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def polygon_csv(record: ResultRecord) -> str:
    dim = len(record.orbits[0].ambient[0]) if record.orbits else 2
    axes = "xyzw"[:dim] if dim <= 4 else [f"x{i}" for i in range(dim)]
    lines = ["orbit,vertex,morse_index,rotation_number," + ",".join(axes)]
    for k, o in enumerate(record.orbits):
        for v, x in enumerate(o.ambient):
            idx = "" if o.morse_index is None else o.morse_index
            rot = "" if o.rotation_number is None else o.rotation_number
            lines.append(f"{k},{v},{idx},{rot}," + ",".join(repr(float(t)) for t in x))
    return "\n".join(lines) + "\n"


def polygon_svg(record: ResultRecord, manifold: ParametricManifold, size: int = 480) -> str:
    """Manifold outline with one closed polygon per orbit."""
    phi = np.linspace(0.0, 2 * math.pi, 721)
    outline = manifold.embed(phi[:, None])
    extent = 1.1 * float(np.max(np.abs(outline)))
    half = size / 2

    def pt(x):
        return f"{half + x[0] / extent * half:.3f},{half - x[1] / extent * half:.3f}"

    body = [f'<polyline fill="none" stroke="#000" stroke-width="1.5" points="{" ".join(pt(x) for x in outline)}"/>']
    for k, o in enumerate(record.orbits):
        color = _COLORS[k % len(_COLORS)]
        pts = " ".join(pt(x) for x in o.ambient)
        body.append(f'<polygon fill="none" stroke="{color}" stroke-width="1.2" points="{pts}">'
                    f'<title>index {o.morse_index}, rotation {o.rotation_number}, length {o.length:.6f}</title></polygon>')
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
            f'viewBox="0 0 {size} {size}">\n' + "\n".join(body) + "\n</svg>\n")


def emit_plot_data(record: ResultRecord, out_dir, with_svg: bool = True) -> List[Path]:
    """Write ``polygons.csv`` and, for plane curves, ``polygons.svg``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "polygons.csv"
    csv_path.write_text(polygon_csv(record))
    paths = [csv_path]
    if with_svg and record.manifold is not None:
        M = from_spec(record.manifold)
        if M.ambient_dim == 2:
            svg_path = out / "polygons.svg"
            svg_path.write_text(polygon_svg(record, M))
            paths.append(svg_path)
    return paths


def default_out_dir() -> str:
    return os.environ.get(OUT_ENV, "results")
