"""Reproducible experiment drivers that emit CSV reports.

Every report starts with one ``#`` line holding a JSON echo of the spec and
the build id, followed by a plain CSV body. Bodies depend only on the spec,
so reruns with the same seed are byte-identical. Wall-clock times are
written on a trailing ``#`` line only when ``timing`` is requested.
"""
from __future__ import annotations

import csv
import io
import json
import subprocess
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from hcs.errors import ExperimentFailure, InvalidInput, InvalidParameter
from hcs.gaussian import mo_bound_report
from hcs.labelcover import gen_planted
from hcs.operators import beckner, gadget_operator
from hcs.oracles import SearchBudget, max_independent_set
from hcs.qcube import QFunction, coordinate_average, dictator, plurality
from hcs.reduction import (FAMILY_OF, PALETTE, _check_kind, decode_tlabeling,
                           intended_coloring, reduce, verify_coloring)


@dataclass
class ExperimentSpec:
    """Parameters of one experiment run; ``seed`` drives every random step."""

    name: str
    seed: int = 0
    params: dict = field(default_factory=dict)
    out: Optional[str] = None
    timing: bool = False

    def __post_init__(self):
        if self.seed is None:
            raise InvalidParameter("experiments need an explicit seed")
        self.seed = int(self.seed)

    def get(self, key, default=None):
        return self.params.get(key, default)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentSpec":
        d = json.loads(text)
        if "name" not in d:
            raise InvalidParameter("spec needs a name")
        return cls(d["name"], d.get("seed", 0), d.get("params", {}), d.get("out"),
                   bool(d.get("timing", False)))


def build_id() -> str:
    """``git describe`` of the source tree, or "unknown" outside a checkout."""
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"],
                             cwd=Path(__file__).resolve().parent, capture_output=True,
                             text=True, timeout=10)
        return out.stdout.strip() or "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


@dataclass
class Report:
    spec: ExperimentSpec
    columns: list
    rows: list
    timings: list = field(default_factory=list)

    def body(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_cell(r.get(c, "")) for c in self.columns])
        return buf.getvalue()

    def to_csv(self) -> str:
        meta = {"experiment": self.spec.name, "spec": asdict(self.spec), "build": build_id()}
        text = "# " + json.dumps(meta, sort_keys=True) + "\n" + self.body()
        if self.spec.timing:
            text += "# wall_time_s " + json.dumps([round(t, 6) for t in self.timings]) + "\n"
        return text

    def write(self, path: Optional[str] = None) -> str:
        text = self.to_csv()
        path = path or self.spec.out
        if path:
            Path(path).write_text(text)
        return text


def csv_body(text: str) -> str:
    """The CSV lines of a report, without ``#`` metadata lines."""
    return "".join(line for line in text.splitlines(keepends=True) if not line.startswith("#"))


def _cell(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, (float, np.floating)):
        return repr(round(float(v), 12))
    if isinstance(v, (list, dict, tuple)):
        return json.dumps(v, separators=(",", ":"), sort_keys=True)
    return str(v)


def _instance_for(kind: str, spec: ExperimentSpec, seed: int):
    nv = int(spec.get("vertices", 3))
    r = int(spec.get("R", 1))
    ne = int(spec.get("edges", max(nv - 1, 1) if nv > 1 else 0))
    labels = r if kind == "almost3" else 2 * r
    return gen_planted(FAMILY_OF[kind], nv, ne, labels, seed)


def _seeds(spec: ExperimentSpec) -> list:
    return [spec.seed + i for i in range(int(spec.get("seeds", 1)))]


# ---------------------------------------------------------------------------


COMPLETENESS_COLUMNS = ["seed", "kind", "lc_vertices", "lc_edges", "labels", "graph_vertices",
                        "graph_edges", "palette", "monochromatic", "uncolored"]


def run_completeness(spec: ExperimentSpec) -> Report:
    """Planted instance -> reduction -> intended coloring -> exact check.

    ``R`` counts coordinates for almost3 and coordinate pairs for col4/col3.
    Raises ExperimentFailure (after building the report) on any
    monochromatic edge.
    """
    kind = _check_kind(spec.get("kind", "almost3"))
    rows, times = [], []
    for seed in _seeds(spec):
        t0 = time.perf_counter()
        G, hidden = _instance_for(kind, spec, seed)
        graph = reduce(kind, G)
        res = verify_coloring(graph, intended_coloring(kind, G, hidden))
        times.append(time.perf_counter() - t0)
        rows.append({"seed": seed, "kind": kind, "lc_vertices": G.num_vertices,
                     "lc_edges": len(G.edges), "labels": G.num_labels,
                     "graph_vertices": graph.num_vertices, "graph_edges": graph.num_edges,
                     "palette": PALETTE[kind], "monochromatic": res["monochromatic"],
                     "uncolored": res["uncolored"]})
    report = Report(spec, COMPLETENESS_COLUMNS, rows, times)
    bad = [r["seed"] for r in rows if r["monochromatic"]]
    if bad:
        report.write()
        raise ExperimentFailure(f"monochromatic edges for seeds {bad}")
    return report


SOUNDNESS_COLUMNS = ["seed", "kind", "set_mode", "graph_vertices", "mis_size", "set_size", "J",
                     "list_sizes", "t", "labels_recovered", "constraints_checked",
                     "satisfied_fraction", "linkage_flagged", "error"]


def _choose_set(mode: str, graph, coloring, rng, mis):
    if mode == "color-class":
        return list(np.flatnonzero(coloring.color == 0))
    if mode == "mis":
        return mis[1]
    if mode == "empty":
        return []
    if mode == "random":
        return list(np.flatnonzero(rng.random(graph.num_vertices) < 0.5))
    raise InvalidParameter(f"unknown set mode {mode!r}")


def run_soundness_probe(spec: ExperimentSpec, budget: Optional[SearchBudget] = None) -> Report:
    """Decode t-labelings from independent sets of planted reductions.

    ``set_modes`` picks the sets: "color-class" (class 0 of the intended
    coloring), "mis" (the oracle's maximum independent set), "empty" and
    "random" (a random half of the vertices, normally not independent and
    reported as an error row).
    """
    kind = _check_kind(spec.get("kind", "almost3"))
    modes = spec.get("set_modes", ["color-class"])
    k, delta, eps = int(spec.get("k", 3)), float(spec.get("delta", 0.05)), \
        float(spec.get("epsilon", 0.1))
    use_mis = bool(spec.get("mis", True))
    rows, times = [], []
    for seed in _seeds(spec):
        G, hidden = _instance_for(kind, spec, seed)
        graph = reduce(kind, G)
        coloring = intended_coloring(kind, G, hidden)
        mis = max_independent_set(graph, budget) if (use_mis or "mis" in modes) else None
        rng = np.random.default_rng(seed)
        for mode in modes:
            t0 = time.perf_counter()
            S = _choose_set(mode, graph, coloring, rng, mis)
            row = {"seed": seed, "kind": kind, "set_mode": mode,
                   "graph_vertices": graph.num_vertices,
                   "mis_size": mis[0] if mis else "", "set_size": len(S), "error": ""}
            try:
                J, L, rep = decode_tlabeling(kind, graph, S, k, delta, eps)
            except InvalidInput:
                row["error"] = "invalid-input"
                rows.append(row)
                times.append(time.perf_counter() - t0)
                continue
            flagged = [e["common_influential"] for e in rep["edges"]]
            row.update(J=len(J), list_sizes=[rep["list_sizes"][v] for v in J], t=rep["t"],
                       labels_recovered=all(hidden[v] in L[v] for v in J),
                       constraints_checked=len(rep["edges"]),
                       satisfied_fraction=rep["satisfied_fraction"],
                       linkage_flagged=(sum(flagged) / len(flagged)) if flagged else 1.0)
            rows.append(row)
            times.append(time.perf_counter() - t0)
    return Report(spec, SOUNDNESS_COLUMNS, rows, times)


STABILITY_COLUMNS = ["family", "operator", "rho_param", "n", "inner", "lower", "upper", "mu",
                     "nu", "rho", "margin", "verdict", "violating_coords"]


def _family_pair(family: str, q: int, n: int, rng):
    """(f, g) with values in [0, 1] for one named family."""
    if family == "constants":
        a, b = rng.uniform(0.05, 0.95, size=2)
        return QFunction.constant(q, n, a), QFunction.constant(q, n, b)
    if family == "dictators":
        return dictator(q, n, 1, 0), dictator(q, n, 1, 0)
    if family == "mixture":
        # per-coordinate tables in [1/4, 3/4]: influences <= 1/(16 n^2)
        f = coordinate_average(q, rng.uniform(0.25, 0.75, size=(n, q)))
        g = coordinate_average(q, rng.uniform(0.25, 0.75, size=(n, q)))
        return f, g
    if family == "plurality":
        p = QFunction(q, n, (plurality(q, n).values == 0).astype(float))
        return p, p
    raise InvalidParameter(f"unknown function family {family!r}")


def _operator(name: str, rho: Optional[float]):
    if name == "beckner":
        if rho is None:
            raise InvalidParameter("beckner needs a rho grid")
        return beckner(3, rho), False, 1
    if name == "almost3":
        return gadget_operator("almost3"), False, 1
    if name == "alpha":
        return gadget_operator("alpha"), True, 2
    raise InvalidParameter(f"unknown operator {name!r}")


def run_stability_scan(spec: ExperimentSpec) -> Report:
    """mo_bound_report over families x operators x n (x rho for beckner)."""
    families = spec.get("families", ["constants", "mixture", "dictators"])
    operators = spec.get("operators", ["almost3"])
    ns = [int(n) for n in spec.get("n", [2, 3, 4])]
    rhos = [float(r) for r in spec.get("rho", [0.5])]
    k, delta, eps = int(spec.get("k", 3)), float(spec.get("delta", 0.05)), \
        float(spec.get("epsilon", 0.05))
    rng = np.random.default_rng(spec.seed)
    rows, times = [], []
    for fam in families:
        for opname in operators:
            for rho_param in (rhos if opname == "beckner" else [None]):
                T, fish, scale = _operator(opname, rho_param)
                for n in ns:
                    t0 = time.perf_counter()
                    f, g = _family_pair(fam, 3, scale * n, rng)
                    rep = mo_bound_report(f, g, T, k, delta, eps, fish=fish)
                    times.append(time.perf_counter() - t0)
                    rows.append({"family": fam, "operator": opname,
                                 "rho_param": "" if rho_param is None else rho_param,
                                 "n": scale * n, "inner": rep.inner, "lower": rep.lower,
                                 "upper": rep.upper, "mu": rep.mu, "nu": rep.nu,
                                 "rho": rep.rho, "margin": rep.margin, "verdict": rep.verdict,
                                 "violating_coords": [list(c) if isinstance(c, tuple) else c
                                                      for c in rep.violating_coords]})
    return Report(spec, STABILITY_COLUMNS, rows, times)


EXPERIMENTS = {"completeness": run_completeness, "soundness": run_soundness_probe,
               "stability": run_stability_scan}
