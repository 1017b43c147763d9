# cli.py
from __future__ import annotations

import math
import sys
from pathlib import Path
from typing import Callable, Optional

import click
import numpy as np

from asymcom.abel import x_sing_closed
from asymcom.algebra import Path as XPath
from asymcom.comotion import build_constant, extend_spine, growth_constant
from asymcom.config import JobConfig, load_config, require
from asymcom.errors import KIND_HINTS, AsymError, ConfigError, VerificationError
from asymcom.inversion import constant_from_ic, continue_trajectory, handover_constant
from asymcom.model import RkTrajectory
from asymcom.oracle import attractor, handoff, near_root_visits, phase_field, region_sequence, rk_integrate
from asymcom.report import (
    cx,
    equilibrium_dict,
    series_summary,
    singularity_dict,
    write_csv,
    write_json,
)
from asymcom.singular import build_singular, singularity_array, verify_all
from asymcom.ui.console import Console, fmt_complex, get_console, set_console


# ---------------------------------------------------------------------------
# Shared plumbing
# ---------------------------------------------------------------------------

def _detail_lines(details: dict) -> list[str]:
    out = []
    for k, v in details.items():
        if isinstance(v, RkTrajectory):
            continue
        if isinstance(v, complex):
            v = fmt_complex(v)
        out.append(f"{k}: {v}")
    return out


def _execute(command: str, config_path: str, work: Callable[[JobConfig], None],
             section: Optional[str] = None) -> None:
    """Load the job file, run `work`, and map errors onto exit codes."""
    console = get_console()
    try:
        cfg = load_config(config_path, section)
        console.print_run_started(command, cfg.source)
        work(cfg)
    except AsymError as e:
        console.print_error(e.kind, e.message, details=_detail_lines(e.details),
                            suggestion=KIND_HINTS.get(e.kind))
        sys.exit(e.exit_code)
    except KeyboardInterrupt:
        console.print_info("\nInterrupted.")
        sys.exit(130)
    except Exception as e:
        console.print_exception(e)
        sys.exit(1)


_config_option = click.option(
    "--config",
    "config_path",
    required=True,
    type=click.Path(dir_okay=False),
    help="JSON job file.",
)
_out_option = click.option(
    "--out",
    "out_dir",
    default="out",
    show_default=True,
    type=click.Path(file_okay=False),
    help="Output directory.",
)


def _rk(cfg: JobConfig, nodes, y0: complex) -> RkTrajectory:
    tol = cfg.tolerances
    return rk_integrate(cfg.ode, XPath.polyline(nodes, plane="x"), y0, tol.rtol,
                        atol=tol.atol, samples=cfg.rk_samples, blowup=tol.blowup)


# ---------------------------------------------------------------------------
# CLI group
# ---------------------------------------------------------------------------

@click.group()
@click.option(
    "--debug",
    is_flag=True,
    default=False,
    help="Show full stack traces and internal debug output.",
)
@click.option(
    "--verbose",
    is_flag=True,
    default=False,
    help="Show per-stage diagnostics (quadrature checks, fits).",
)
@click.pass_context
def cli(ctx, debug, verbose):
    """asymcom — asymptotic constants of motion for y' = sum_k P_k(y)/x^k."""
    set_console(Console(debug=debug, verbose=verbose))
    ctx.ensure_object(dict)
    ctx.obj["debug"] = debug


# ---------------------------------------------------------------------------
# asymcom roots
# ---------------------------------------------------------------------------

@cli.command()
@_config_option
@_out_option
def roots(config_path, out_dir):
    """Roots of P_0 with their simplicity margins."""
    def work(cfg: JobConfig) -> None:
        console = get_console()
        rs = cfg.ode.roots
        console.print_section("roots of P_0")
        for j, (p, m) in enumerate(zip(rs.roots, rs.margins)):
            console.print_root(j, p, m)
        console.print_value("min separation", f"{rs.min_separation:.6g}")
        path = write_json(Path(out_dir) / "roots.json", {
            "roots": list(rs.roots),
            "margins": list(rs.margins),
            "min_separation": rs.min_separation,
            "eps_root": cfg.ode.eps_root,
        })
        console.print_written(str(path))

    _execute("roots", config_path, work)


# ---------------------------------------------------------------------------
# asymcom com
# ---------------------------------------------------------------------------

@cli.command()
@_config_option
@_out_option
def com(config_path, out_dir):
    """Build the R-domain constant of motion and tabulate F_k."""
    def work(cfg: JobConfig) -> None:
        console = get_console()
        require(cfg, "contour", cfg.contour is not None)
        series = build_constant(cfg.ode, cfg.contour, cfg.base_y, anchors=cfg.anchors,
                                close_top=cfg.close_top)
        console.print_section("constant of motion")
        console.print_value("a", series.a)
        for k, ck in enumerate(series.c, start=1):
            console.print_value(f"c_{k}", ck)

        series = extend_spine(series, cfg.y_grid)
        rows = []
        for F in series.spine[1:]:
            row = cx("y", F.y)
            for k in range(series.n + 1):
                row.update(cx(f"F{k}", F.values[k]))
                row.update(cx(f"dF{k}", F.derivatives[k]))
            rows.append(row)

        summary = series_summary(series)
        if cfg.y_grid:
            summary["growth_constant"] = growth_constant(series, cfg.y_grid)
        out = Path(out_dir)
        console.print_written(str(write_json(out / "com.json", summary)))
        console.print_written(str(write_csv(out / "f_table.csv", "f_table", rows, order=series.n)))

    _execute("com", config_path, work)


# ---------------------------------------------------------------------------
# asymcom invert
# ---------------------------------------------------------------------------

@cli.command()
@_config_option
@_out_option
def invert(config_path, out_dir):
    """Trajectory from C_n(y, x) = K next to the Runge-Kutta reference."""
    def work(cfg: JobConfig) -> None:
        console = get_console()
        tol = cfg.tolerances
        require(cfg, "contour", cfg.contour is not None)
        require(cfg, "x_path", len(cfg.x_path) >= 2)
        series = build_constant(cfg.ode, cfg.contour, cfg.base_y, anchors=cfg.anchors,
                                close_top=cfg.close_top)
        traj = _rk(cfg, cfg.x_path, cfg.y0)
        xs, ys = list(traj.xs), list(traj.ys)

        i0 = next((i for i, x in enumerate(xs) if abs(x) > cfg.x_min), None)
        if i0 is None or i0 >= len(xs) - 1:
            raise ConfigError("InvalidConfig", "no trajectory samples beyond x_min", {"x_min": cfg.x_min})
        K, start = handover_constant(series, xs, ys, i0)
        if cfg.K is not None and abs(K - cfg.K) > tol.k_tol:
            raise VerificationError(
                "ConstantMismatch",
                "quoted K differs from C_n on the reference trajectory",
                {"K": cfg.K, "K_trajectory": K, "k_tol": tol.k_tol},
            )
        samples = continue_trajectory(
            series, K, XPath.polyline(xs[i0:], plane="x"), ys[i0], start=start, h_max=math.inf,
            tol=tol.newton_tol, eps_near=tol.eps_near, overlap=tol.overlap, r0=tol.r0,
        )

        rows = []
        errs = []
        for s, y_rk in zip(samples, ys[i0:]):
            err = abs(s.y - y_rk) / abs(y_rk)
            errs.append(err)
            row = {**cx("x", s.x), **cx("y", s.y), **cx("K_check", s.K_check), "region": str(s.region),
                   **cx("y_rk", y_rk), "rel_err": err}
            rows.append(row)

        drift = max(abs(s.K_check - K) for s in samples)
        console.print_section("inversion")
        console.print_value("K", complex(K))
        console.print_value("K (initial data)", complex(constant_from_ic(series, cfg.x_path[0], cfg.y0)))
        console.print_value("samples", len(samples))
        console.print_value("max rel. error", f"{max(errs):.3e}")
        console.print_value("max |K_check-K|", f"{drift:.3e}")
        out = Path(out_dir)
        console.print_written(str(write_json(out / "invert.json", {
            "K": complex(K), "K_quoted": cfg.K, "x_min": cfg.x_min, "samples": len(samples),
            "max_rel_err": max(errs), "max_K_drift": drift, "rk_nfev": traj.nfev,
        })))
        console.print_written(str(write_csv(out / "trajectory.csv", "trajectory", rows)))

    _execute("invert", config_path, work)


# ---------------------------------------------------------------------------
# asymcom sing
# ---------------------------------------------------------------------------

@cli.command()
@_config_option
@_out_option
def sing(config_path, out_dir):
    """Movable singularities from the singular-domain constant, checked by RK."""
    def work(cfg: JobConfig) -> None:
        console = get_console()
        ode = cfg.ode
        series = build_singular(ode, cfg.direction)
        shifts = cfg.shifts or (tuple(0 for _ in ode.roots.roots),)
        reports = singularity_array(series, cfg.x0, cfg.sing_y0, shifts)
        if cfg.verify:
            reports = verify_all(ode, reports, cfg.workers, detour=cfg.detour, blowup=cfg.tolerances.blowup)

        console.print_section("singularities")
        for r in reports:
            console.print_singularity(r.x_sing, r.branch_shift, r.status, r.digits)
        result = {
            "x0": cfg.x0,
            "y0": cfg.sing_y0,
            "decay": list(series.decay),
            "q": series.q,
            "singularities": [singularity_dict(r) for r in reports],
        }
        if cfg.preset == "abel":
            result["closed_form"] = x_sing_closed(cfg.x0, cfg.sing_y0)
            console.print_value("closed form", result["closed_form"])
        console.print_written(str(write_json(Path(out_dir) / "singularities.json", result)))

        bad = [r for r in reports if r.status in ("mismatch", "failed")]
        if bad:
            raise VerificationError(
                "VerificationMismatch",
                f"{len(bad)} of {len(reports)} predictions not confirmed",
                {"shifts": [list(r.branch_shift) for r in bad]},
            )

    _execute("sing", config_path, work)


# ---------------------------------------------------------------------------
# asymcom phase
# ---------------------------------------------------------------------------

@cli.command()
@_config_option
@_out_option
def phase(config_path, out_dir):
    """Vector field of y along rays x = x0 + s e^(it), with equilibria."""
    def work(cfg: JobConfig) -> None:
        console = get_console()
        grid = cfg.phase.grid()
        rows = []
        angles = []
        console.print_section("equilibria")
        for t in cfg.phase.angles:
            pf = phase_field(cfg.ode, cfg.x0, t, grid)
            for (yr, yi), (vr, vi) in zip(pf.points, pf.vectors):
                rows.append({"t": t, "y_re": yr, "y_im": yi, "v_re": vr, "v_im": vi})
            try:
                settles = attractor(cfg.ode, cfg.x0, t, cfg.y0, eps_near=cfg.tolerances.eps_near)
            except AsymError as e:
                console.print_debug(f"attractor at t={t:.4f}: {e.kind}")
                settles = None
            kinds = ", ".join(f"p_{e.index} {e.stability}" for e in pf.equilibria)
            console.print_info(f"  t = {t:+.4f}  {kinds}")
            if any(e.stability == "marginal" for e in pf.equilibria):
                console.print_warning(f"marginal equilibrium at t = {t:.6g}")
            angles.append({
                "t": t,
                "equilibria": [equilibrium_dict(e) for e in pf.equilibria],
                "attractor": settles,
            })
        out = Path(out_dir)
        console.print_written(str(write_json(out / "phase.json", {"x0": cfg.x0, "y0": cfg.y0, "angles": angles})))
        console.print_written(str(write_csv(out / "phase.csv", "phase", rows)))

    _execute("phase", config_path, work)


# ---------------------------------------------------------------------------
# asymcom regions
# ---------------------------------------------------------------------------

@cli.command()
@_config_option
@_out_option
def regions(config_path, out_dir):
    """Region tags along an RK trajectory and overlap-band handoff residuals."""
    def work(cfg: JobConfig) -> None:
        console = get_console()
        tol = cfg.tolerances
        require(cfg, "x_path", len(cfg.x_path) >= 2)
        traj = _rk(cfg, cfg.x_path, cfg.y0)
        tags, order = region_sequence(cfg.ode, traj.xs, traj.ys, eps_near=tol.eps_near,
                                      overlap=tol.overlap, r0=tol.r0)
        records = handoff(cfg.ode, traj, tags, overlap=tol.overlap)

        starts = {}
        xs = np.asarray(traj.xs)
        for rec in records:
            i = int(np.argmin(np.abs(xs - rec.x_range[0])))
            starts[i] = rec
        rows = []
        for i, (x, y, tag) in enumerate(zip(traj.xs, traj.ys, tags)):
            rec = starts.get(i)
            rows.append({
                "index": i, **cx("x", x), **cx("y", y), "region": str(tag),
                "handoff_residual": rec.residual if rec else None,
                "handoff_bound": rec.bound if rec else None,
            })

        console.print_section("regions")
        visits = near_root_visits(tags)
        console.print_value("approach order", order)
        console.print_value("near-root visits", visits)
        for rec in records:
            mark = "ok" if rec.within_bound else "above bound"
            console.print_info(f"  p_{rec.root} {rec.side:<5}: residual {rec.residual:.3e}, "
                               f"bound {rec.bound:.3e} ({mark})")
        out = Path(out_dir)
        console.print_written(str(write_json(out / "regions.json", {
            "order": order,
            "near_root_visits": visits,
            "handoff": [
                {"root": r.root, "x_range": list(r.x_range), "C_trans": r.C_trans,
                 "residual": r.residual, "bound": r.bound, "side": r.side,
                 "within_bound": r.within_bound}
                for r in records
            ],
        })))
        console.print_written(str(write_csv(out / "regions.csv", "regions", rows)))

        above = [r for r in records if not r.within_bound]
        if above:
            raise VerificationError(
                "HandoffMismatch",
                f"{len(above)} of {len(records)} handoff residuals exceed their bound",
                {"roots": [f"p_{r.root} ({r.side})" for r in above],
                 "worst": max(r.residual / r.bound for r in above)},
            )

    _execute("regions", config_path, work, section="regions")


if __name__ == "__main__":
    cli()
