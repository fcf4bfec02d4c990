//! Matplotlib scripts that render written tables. Nothing here draws; the
//! scripts are plain text artifacts placed next to the data.

const PRELUDE: &str = r##"import csv
import sys
from collections import defaultdict
from pathlib import Path

import matplotlib.pyplot as plt


def load(path):
    with open(path) as f:
        rows = [r for r in csv.reader(f) if r and not r[0].startswith("#")]
    names = [h.split(":")[0] for h in rows[0]]
    cols = defaultdict(list)
    for r in rows[1:]:
        for n, v in zip(names, r):
            try:
                cols[n].append(float(v))
            except ValueError:
                cols[n].append(float("nan"))
    return cols


def groups(cols, *keys):
    out = defaultdict(list)
    for i in range(len(cols[keys[0]])):
        out[tuple(cols[k][i] for k in keys)].append(i)
    return out


here = Path(__file__).resolve().parent
"##;

fn body(name: &str) -> Option<&'static str> {
    Some(match name {
        "ratio" => {
            r##"cols = load(here / "ratio.csv")
lams = sorted(set(cols["lambda"]))
fig, axes = plt.subplots(1, len(lams), figsize=(5 * len(lams), 4), squeeze=False)
for ax, lam in zip(axes[0], lams):
    idx = [i for i, l in enumerate(cols["lambda"]) if l == lam]
    cs = ax.tricontourf([cols["t"][i] for i in idx], [cols["gamma"][i] for i in idx],
                        [cols["ratio"][i] for i in idx], levels=20)
    ax.set_xscale("log")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("gamma")
    ax.set_title(f"R, Lambda={lam:g}")
    fig.colorbar(cs, ax=ax)
"##
        }
        "qfim" => {
            r##"cols = load(here / "qfim.csv")
fig, (a, b) = plt.subplots(1, 2, figsize=(10, 4))
for (lam,), idx in sorted(groups(cols, "lambda").items()):
    g = [cols["gamma"][i] for i in idx]
    a.plot(g, [cols["f_gg"][i] for i in idx], label=f"{lam:g}")
    b.plot(g, [cols["f_ll_rel"][i] for i in idx], label=f"{lam:g}")
a.set_ylabel("F_gg")
b.set_ylabel("F_LL * Lambda^2")
b.set_yscale("log")
for ax in (a, b):
    ax.set_xlabel("gamma")
    ax.legend(title="Lambda")
"##
        }
        "tilde" => {
            r##"cols = load(here / "tilde.csv")
lams = sorted(set(cols["lambda"]))
fig, axes = plt.subplots(1, len(lams), figsize=(5 * len(lams), 4), squeeze=False)
for ax, lam in zip(axes[0], lams):
    for (l, g), idx in sorted(groups(cols, "lambda", "gamma").items()):
        if l == lam:
            ax.loglog([cols["t"][i] for i in idx], [cols["tilde_ll_rel"][i] for i in idx], label=f"{g:g}")
    ax.set_xlabel("t [s]")
    ax.set_title(f"Lambda={lam:g}")
    ax.legend(title="gamma")
"##
        }
        "det" => {
            r##"cols = load(here / "det.csv")
fig, ax = plt.subplots(figsize=(6, 4))
for (lam, g), idx in sorted(groups(cols, "lambda", "gamma").items()):
    ax.loglog([cols["t"][i] for i in idx], [cols["det_rel"][i] for i in idx], label=f"{lam:g}, {g:g}")
ax.set_xlabel("t [s]")
ax.set_ylabel("det F * Lambda^2")
ax.legend(title="Lambda, gamma")
"##
        }
        "compat" => {
            r##"cols = load(here / "compat.csv")
fig, ax = plt.subplots(figsize=(6, 4))
for (lam,), idx in sorted(groups(cols, "lambda").items()):
    ax.loglog([cols["t"][i] for i in idx], [abs(cols["normalized"][i]) + 1e-300 for i in idx], ".", ms=1, label=f"{lam:g}")
ax.set_xlabel("t [s]")
ax.set_ylabel("normalized |trace|")
ax.legend(title="Lambda")
"##
        }
        _ if name.starts_with("wigner_") => {
            r##"name = Path(__file__).stem
cols = load(here / f"{name}.csv")
xs = sorted(set(cols["x"]))
ps = sorted(set(cols["p"]))
w = [[0.0] * len(xs) for _ in ps]
for x, p, v in zip(cols["x"], cols["p"], cols["w"]):
    w[ps.index(p)][xs.index(x)] = v
fig, ax = plt.subplots(figsize=(5, 4))
cs = ax.contourf(xs, ps, w, levels=30)
ax.set_xlabel("x")
ax.set_ylabel("p")
ax.set_title(name)
fig.colorbar(cs, ax=ax)
"##
        }
        _ => return None,
    })
}

/// Script rendering the table `name` from `<name>.csv` in the same
/// directory, or `None` for tables without a figure.
pub fn plot_script(name: &str) -> Option<String> {
    body(name).map(|b| {
        format!(
            "{PRELUDE}\n{b}\nfig.tight_layout()\nout = sys.argv[1] if len(sys.argv) > 1 else here / \"{name}.png\"\nfig.savefig(out, dpi=150)\n"
        )
    })
}
