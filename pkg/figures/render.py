#!/usr/bin/env python3
"""Render study CSVs into publication-style figures.

Standalone companion to the relentropy-lab CLI: it consumes only the CSV
artifacts (plus their .meta.json sidecars) and never recomputes science
beyond an integrity cross-check of the recorded rate fit.

Usage:  python3 figures/render.py --spec spec.json

The spec file describes one figure:

    {
      "kind": "rate-plot" | "amplification" | "term-breakdown",
      "input": "study.csv",
      "out": "figure",            # writes figure.png and figure.svg
      "xlabel": "...", "ylabel": "...", "title": "..."   # optional
    }
"""

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "relentropy-lab-figures"
import matplotlib.pyplot as plt  # noqa: E402


class RenderError(Exception):
    pass


SCHEMAS = {
    "rate-plot": [
        ["eps", "metric"],
        ["mu0", "k0", "metric", "bound_rhs", "fitted_constant"],
    ],
    "amplification": [
        ["eps", "delta", "initial_l2", "final_l2", "sup_amplification"],
    ],
    "term-breakdown": [
        ["t", "x", "eta_rel", "q_rel_flux", "D", "J_flux",
         "Q1", "Q2", "Q3", "Q4", "Q5", "Q6", "hyp_term", "residual"],
    ],
}


def read_csv(path: str, kind: str):
    p = Path(path)
    if not p.exists():
        raise RenderError(f"input CSV not found: {path}")
    with open(p, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or len(rows) < 2:
        raise RenderError(f"input CSV is empty: {path}")
    header = rows[0]
    for schema in SCHEMAS[kind]:
        if header == schema:
            break
    else:
        expected = " or ".join(",".join(s) for s in SCHEMAS[kind])
        missing = sorted(set(SCHEMAS[kind][0]) - set(header))
        raise RenderError(
            f"CSV header {','.join(header)} does not match the {kind} schema "
            f"({expected}); missing columns: {','.join(missing) if missing else 'none'}"
        )
    data = {name: [] for name in header}
    for row in rows[1:]:
        for name, value in zip(header, row):
            data[name].append(float(value))
    return data


def recorded_fit_slope(csv_path: str):
    meta_path = Path(str(csv_path) + ".meta.json")
    if not meta_path.exists():
        return None
    meta = json.loads(meta_path.read_text())
    fits = meta.get("fits", {})
    for name, fit in sorted(fits.items()):
        if name.startswith("metric_vs"):
            return float(fit["slope"])
    return None


def ols_loglog_slope(xs, ys):
    lx = [math.log(x) for x in xs]
    ly = [math.log(y) for y in ys]
    n = len(lx)
    mx = sum(lx) / n
    my = sum(ly) / n
    sxx = sum((a - mx) ** 2 for a in lx)
    sxy = sum((a - mx) * (b - my) for a, b in zip(lx, ly))
    return sxy / sxx


def render_rate_plot(data, spec, ax):
    param = "eps" if "eps" in data else "mu0"
    xs, ys = data[param], data["metric"]
    if any(v <= 0 for v in xs + ys):
        raise RenderError("rate plot needs positive parameters and metrics")
    slope = ols_loglog_slope(xs, ys)
    recorded = recorded_fit_slope(spec["input"])
    if recorded is not None and abs(slope - recorded) > 1e-9:
        raise RenderError(
            f"slope recomputed from raw points ({slope:.12g}) does not match the "
            f"recorded fit ({recorded:.12g}); treating the CSV as corrupted"
        )
    ax.loglog(xs, ys, "o-", color="tab:blue")
    x0, x1 = min(xs), max(xs)
    y0 = ys[xs.index(x0)]
    ax.loglog([x0, x1], [y0, y0 * (x1 / x0) ** slope], "--", color="tab:gray",
              label=f"slope ≈ {slope:.2f}")
    ax.legend()
    ax.set_xlabel(spec.get("xlabel", param))
    ax.set_ylabel(spec.get("ylabel", "metric"))


def render_amplification(data, spec, ax):
    groups = {}
    for eps, delta, amp in zip(data["eps"], data["delta"], data["sup_amplification"]):
        groups.setdefault(eps, []).append((delta, amp))
    for eps, pts in sorted(groups.items()):
        pts.sort()
        ax.semilogx([p[0] for p in pts], [p[1] for p in pts], "o-", label=f"eps = {eps:g}")
    ax.legend()
    ax.set_xlabel(spec.get("xlabel", "perturbation amplitude"))
    ax.set_ylabel(spec.get("ylabel", "sup amplification"))


def render_term_breakdown(data, spec, ax):
    times = sorted(set(data["t"]))
    xs = sorted(set(data["x"]))
    dx = (max(xs) - min(xs)) / max(len(xs) - 1, 1) if len(xs) > 1 else 1.0
    series = {name: [] for name in ["Q1", "Q2", "Q3", "Q4", "Q5", "Q6", "D", "residual"]}
    for t in times:
        idx = [i for i, tv in enumerate(data["t"]) if tv == t]
        for name in series:
            series[name].append(sum(abs(data[name][i]) for i in idx) * dx)
    for name, vals in series.items():
        style = "-" if name.startswith("Q") else "--"
        ax.plot(times, vals, style, label=name)
    ax.set_yscale("log")
    ax.legend(ncol=4, fontsize=8)
    ax.set_xlabel(spec.get("xlabel", "t"))
    ax.set_ylabel(spec.get("ylabel", "x-integrated magnitude"))


def render(spec: dict):
    kind = spec.get("kind")
    if kind not in SCHEMAS:
        raise RenderError(f"unknown figure kind: {kind!r}")
    if "input" not in spec or "out" not in spec:
        raise RenderError("spec needs 'input' and 'out'")
    data = read_csv(spec["input"], kind)
    fig, ax = plt.subplots(figsize=(5.0, 3.4), constrained_layout=True)
    if kind == "rate-plot":
        render_rate_plot(data, spec, ax)
    elif kind == "amplification":
        render_amplification(data, spec, ax)
    else:
        render_term_breakdown(data, spec, ax)
    if "title" in spec:
        ax.set_title(spec["title"])
    out = Path(spec["out"])
    written = []
    for ext in (".png", ".svg"):
        target = out.with_suffix(ext)
        fig.savefig(target, dpi=150, metadata={"Date": None} if ext == ".svg" else None)
        written.append(str(target))
    plt.close(fig)
    return written


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--spec", required=True, help="figure spec JSON file")
    args = parser.parse_args(argv)
    try:
        spec = json.loads(Path(args.spec).read_text())
        written = render(spec)
    except RenderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
