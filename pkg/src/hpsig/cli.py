"""Command-line front end.  Reports go to stdout as JSON, a short summary to stderr."""

from __future__ import annotations

import os
import sys
from pathlib import Path

import click
import numpy as np

from . import io
from .complexes import (
    SingularFiberError,
    check_acyclic_iff_B_invertible,
    lemma_Q_identities,
    signature_data,
    validate_complex,
    validate_duality,
)
from .groupoid_checks import identity_suite
from .homotopy import ChainMap, signature_invariance, verify_homotopy_equivalence
from .loops import DEFAULT_SAMPLES
from .models import (
    coarsening_map,
    conjugate_permutation,
    conjugation_isomorphism,
    cycle_graph_complex,
    parse_permutation,
    prism_homotopy,
    random_hp_complex,
    subdivision_equivalence,
    suspension_model,
)
from .modules import ModuleMap
from .reports import CheckResult, Report, clean
from .smoothing import (
    STANDARD_PHIS,
    PullbackData,
    SmoothingPolynomial,
    duality_compat_check,
    phi_independence_check,
    poincare_identity_check,
    pullback_check,
)
from .winding import LoopTooWildError, winding_with_residual

EXIT_OK, EXIT_FAIL, EXIT_PARSE = 0, 1, 2


def _default_samples() -> int:
    raw = os.environ.get("HP_SIG_SAMPLES")
    if raw is None:
        return DEFAULT_SAMPLES
    try:
        value = int(raw)
    except ValueError:
        raise click.UsageError(f"HP_SIG_SAMPLES must be an integer, got {raw!r}")
    if value < 2:
        raise click.UsageError("HP_SIG_SAMPLES must be at least 2")
    return value


def _emit(doc: dict, out: str | None) -> None:
    text = io.dumps(doc)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _finish(command: str, inputs: list, report: Report, out: str | None, results: dict | None = None,
            summary: str | None = None, raw: dict | None = None) -> None:
    """Emit the report and exit.  ``raw`` results are stored without rounding (sample data meant for reuse)."""
    doc = {
        "command": command,
        "inputs_digest": io.digest(*inputs),
        "pass": report.passed,
        "checks": [c.to_json() for c in report.checks],
        "notes": list(report.notes),
        "results": {**clean(results or {}), **(raw or {})},
    }
    _emit(doc, out)
    click.echo(summary or report.summary(), err=True)
    sys.exit(EXIT_OK if report.passed else EXIT_FAIL)


def _fail(command: str, inputs: list, check: str, message: str, out: str | None) -> None:
    rep = Report(command)
    rep.add(CheckResult(check, float("inf"), False, notes=[message]))
    rep.notes.append(message)
    _finish(command, inputs, rep, out, summary=f"{command}: FAIL: {message}")


def _parse_guard(fn):
    """Map input format problems to exit code 2."""
    import functools

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except io.FormatError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_PARSE)

    return wrapper


samples_option = click.option("--samples", type=click.IntRange(min=2), default=None,
                              help="Fiber grid size (default 256, or HP_SIG_SAMPLES).")
seed_option = click.option("--seed", type=int, default=0, show_default=True, help="Seed for all randomness.")
out_option = click.option("--out", type=click.Path(dir_okay=False, writable=True), default=None,
                          help="Write the JSON document here instead of stdout.")
tol_option = click.option("--tol", type=float, default=None, help="Override the main tolerance of the check.")


def _samples(value: int | None) -> int:
    return value if value is not None else _default_samples()


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(package_name="artifact")
def main() -> None:
    """Verify duality complexes over loop algebras and their signature invariants."""


# ----------------------------------------------------------------------
# generators


@main.command("model-gen")
@click.option("--sigma", help="Permutation in 1-based cycle notation, e.g. '(1 2)(3)' or 'id'.")
@click.option("--points", type=int, default=None, help="Number of points when --sigma is 'id' or leaves fixed points implicit.")
@click.option("--k", "k", type=click.IntRange(min=1), default=1, show_default=True, help="Vertices per fundamental domain.")
@click.option("--random", "random_", is_flag=True, help="Random finite-dimensional complex.")
@click.option("--ranks", help="Comma separated ranks for --random, e.g. 1,2,1.")
@click.option("--acyclic", is_flag=True, help="With --random: draw an acyclic complex.")
@click.option("--cycle-graph", type=int, default=None, help="Cochains of the N-cycle graph (N odd).")
@seed_option
@out_option
def model_gen(sigma, points, k, random_, ranks, acyclic, cycle_graph, seed, out):
    """Write a model document."""
    chosen = sum(x is not None and x is not False for x in (sigma, cycle_graph)) + int(random_)
    if chosen != 1:
        raise click.UsageError("choose exactly one of --sigma, --random, --cycle-graph")
    try:
        if sigma is not None:
            doc = io.suspension_to_json(suspension_model(parse_permutation(sigma, points), k))
        elif random_:
            if not ranks:
                raise click.UsageError("--random needs --ranks")
            rk = [int(v) for v in ranks.split(",")]
            doc = io.model_to_json(random_hp_complex(seed, rk, acyclic=acyclic), {"seed": seed})
        else:
            doc = io.model_to_json(cycle_graph_complex(cycle_graph))
    except ValueError as exc:
        raise click.UsageError(str(exc))
    _emit(doc, out)


@main.command("chainmap-gen")
@click.option("--sigma", required=True, help="Permutation of the source model.")
@click.option("--points", type=int, default=None)
@click.option("--k", "k", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--subdivide", type=click.IntRange(min=1), default=None, help="Subdivision factor.")
@click.option("--coarsen", type=click.IntRange(min=1), default=None,
              help="Coarsening factor (source is the k*factor model, target the k model).")
@click.option("--relabel", default=None, help="Relabeling permutation tau; target is tau sigma tau^-1.")
@click.option("--source-out", type=click.Path(dir_okay=False), default=None, help="Also write the source model.")
@click.option("--target-out", type=click.Path(dir_okay=False), default=None, help="Also write the target model.")
@click.option("--homotopy-out", type=click.Path(dir_okay=False), default=None,
              help="With --subdivide or --coarsen: write K on the fine model with A R - I = K b + b K.")
@out_option
def chainmap_gen(sigma, points, k, subdivide, coarsen, relabel, source_out, target_out, homotopy_out, out):
    """Write a chain map between suspension models."""
    if sum(x is not None for x in (subdivide, coarsen, relabel)) != 1:
        raise click.UsageError("choose exactly one of --subdivide, --coarsen, --relabel")
    try:
        perm = parse_permutation(sigma, points)
        model = suspension_model(perm, k)
        if subdivide is not None:
            A = subdivision_equivalence(model, subdivide)
            src, tgt = model, suspension_model(perm, k * subdivide)
        elif coarsen is not None:
            A = coarsening_map(model, coarsen)
            src, tgt = suspension_model(perm, k * coarsen), model
        else:
            tau = parse_permutation(relabel, len(perm))
            A = conjugation_isomorphism(perm, tau, k)
            src, tgt = model, suspension_model(conjugate_permutation(perm, tau), k)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    if homotopy_out:
        if relabel is not None:
            raise click.UsageError("--homotopy-out needs --subdivide or --coarsen")
        K = prism_homotopy(model, subdivide or coarsen)
        Path(homotopy_out).write_text(io.dumps({"kind": "chain-homotopy", "K": [K.matrix.to_json()]}))
    if source_out:
        Path(source_out).write_text(io.dumps(io.suspension_to_json(src)))
    if target_out:
        Path(target_out).write_text(io.dumps(io.suspension_to_json(tgt)))
    _emit(io.chain_map_to_json(A), out)


# ----------------------------------------------------------------------
# single-model commands


@main.command("validate")
@click.argument("model", type=click.Path(dir_okay=False))
@samples_option
@tol_option
@out_option
@_parse_guard
def validate_cmd(model, samples, tol, out):
    """Check the complex and duality conditions, the bounded transform lemma and acyclicity."""
    raw = io.load_json(model)
    c = io.model_from_json(raw)
    n = _samples(samples)
    rep = Report("validate")
    kw = {} if tol is None else {"tol": tol}
    rep.add(validate_complex(c, **kw))
    if c.T is not None:
        rep.add(validate_duality(c, n, **kw))
    else:
        rep.notes.append("model carries no duality operator")
    rep.add(lemma_Q_identities(c, n))
    rep.add(check_acyclic_iff_B_invertible(c, n))
    fc = c.cohomology(c.grid(n))
    jumps = set(fc.rank_jump_fibers())
    generic = next((j for j in range(fc.n_fibers) if j not in jumps), 0)
    results = {"label": c.label, "n": c.n, "ranks": c.ranks, "algebra": c.kind, "samples": n,
               "betti": list(fc.betti(generic))}
    _finish("validate", [raw, n, tol], rep, out, results)


@main.command("signature")
@click.argument("model", type=click.Path(dir_okay=False))
@samples_option
@click.option("--unitary-out", type=click.Path(dir_okay=False), default=None,
              help="Write the sampled signature unitary here; otherwise it is included in the report.")
@out_option
@_parse_guard
def signature_cmd(model, samples, unitary_out, out):
    """Signature unitary of a model and its winding number."""
    raw = io.load_json(model)
    c = io.model_from_json(raw)
    n = _samples(samples)
    inputs = [raw, n]
    if c.T is None:
        _fail("signature", inputs, "duality-present", "model carries no duality operator", out)
    if c.n % 2 == 0:
        _fail("signature", inputs, "odd-dimension", "odd dimension required", out)
    try:
        data = signature_data(c, n)
    except SingularFiberError as exc:
        _fail("signature", inputs, "B-S-invertible", str(exc), out)
    try:
        w, residual, used = winding_with_residual(data.U)
    except LoopTooWildError as exc:
        _fail("signature", inputs, "winding", str(exc), out)
    rep = Report("signature")
    rep.add(CheckResult("unitarity", data.U.unitarity_defect(), data.U.unitarity_defect() <= 1e-9))
    rep.add(CheckResult("winding-residual", residual, residual < 0.1, details={"grid": used}))
    if data.polar_corrected:
        rep.notes.append(f"B and S do not anticommute; stored the polar part (raw defect {data.raw_unitarity_defect:.3g})")
    results = {"winding": w, "algebra": c.kind, "samples": n, "dim": data.U.dim,
               "polar_corrected": data.polar_corrected}
    raw_out = None
    if unitary_out:
        Path(unitary_out).write_text(io.dumps(data.U.to_json()))
    else:
        raw_out = {"unitary": data.U.to_json()}
    _finish("signature", inputs, rep, out, results, summary=f"signature: winding {w}", raw=raw_out)


@main.command("winding")
@click.argument("loop", type=click.Path(dir_okay=False))
@samples_option
@out_option
@_parse_guard
def winding_cmd(loop, samples, out):
    """Winding number of a unitary loop (sampled, or a banded loop matrix such as [z])."""
    raw = io.load_json(loop)
    n = _samples(samples)
    u = io.loop_from_json(raw, n)
    inputs = [raw, n]
    try:
        w, residual, used = winding_with_residual(u)
    except (LoopTooWildError, ValueError) as exc:
        _fail("winding", inputs, "winding", str(exc), out)
    rep = Report("winding")
    rep.add(CheckResult("unitarity", u.unitarity_defect(), u.unitarity_defect() <= 1e-9))
    rep.add(CheckResult("winding-residual", residual, residual < 0.1, details={"grid": used}))
    _finish("winding", inputs, rep, out, {"winding": w, "dim": u.dim}, summary=f"winding: {w}")


# ----------------------------------------------------------------------
# maps between models


def _load_pair(model_a, model_b, chain):
    ra, rb, rc = io.load_json(model_a), io.load_json(model_b), io.load_json(chain)
    a = io.model_from_json(ra)
    b = a if rb == ra else io.model_from_json(rb)
    A = io.chain_map_from_json(rc, a, b)
    return (ra, rb, rc), A


@main.command("homotopy-verify")
@click.argument("model_a", type=click.Path(dir_okay=False))
@click.argument("model_b", type=click.Path(dir_okay=False))
@click.argument("chainmap", type=click.Path(dir_okay=False))
@samples_option
@tol_option
@out_option
@_parse_guard
def homotopy_verify(model_a, model_b, chainmap, samples, tol, out):
    """Check that a chain map is a homotopy equivalence compatible with the dualities, and compare signatures."""
    raws, A = _load_pair(model_a, model_b, chainmap)
    n = _samples(samples)
    inputs = [*raws, n, tol]
    chain = A.check()
    if not chain.passed:
        rep = Report("homotopy-verify")
        rep.add(chain)
        rep.notes.append("not a chain map")
        _finish("homotopy-verify", inputs, rep, out, summary="homotopy-verify: FAIL: not a chain map")
    rep = Report("homotopy-verify")
    if A.is_identity():
        rep.add(chain)
        rep.notes.append("identity map on one model; nothing further to compare")
        _finish("homotopy-verify", inputs, rep, out, {"fast_path": True})
    if A.source.T is None or A.target.T is None:
        raise io.FormatError("both models need a duality operator")
    kw = {} if tol is None else {"tol": tol}
    rep.add(verify_homotopy_equivalence(A, n, **kw))
    results: dict = {"fast_path": False}
    if A.source.n % 2 == 1 and rep.passed:
        inv = signature_invariance(A, n_samples=n)
        rep.add(inv)
        for c in inv.checks:
            if c.check == "endpoint-windings-equal":
                results["windings"] = c.details.get("windings")
    elif A.source.n % 2 == 0:
        rep.notes.append("even length: signature comparison skipped (odd dimension required)")
    _finish("homotopy-verify", inputs, rep, out, results)


def _phis(values: tuple[str, ...]) -> list[SmoothingPolynomial]:
    try:
        return [SmoothingPolynomial.parse(v) for v in values] if values else list(STANDARD_PHIS)
    except ValueError as exc:
        raise io.FormatError(f"--phi: {exc}") from exc


@main.command("pullback-verify")
@click.argument("model_a", type=click.Path(dir_okay=False))
@click.argument("model_b", type=click.Path(dir_okay=False))
@click.argument("chainmap", type=click.Path(dir_okay=False))
@click.option("--phi", "phi_texts", multiple=True, help="Smoothing polynomial with phi(0)=1, e.g. '1-x/8' (repeatable).")
@click.option("--back", type=click.Path(dir_okay=False), default=None,
              help="Chain map MODEL_B -> MODEL_A for the round trip and duality compatibility.")
@click.option("--homotopy", type=click.Path(dir_okay=False), default=None,
              help="Degree -1 maps K on MODEL_A with back o map - I = K b + b K (default zero).")
@samples_option
@tol_option
@out_option
@_parse_guard
def pullback_verify(model_a, model_b, chainmap, phi_texts, back, homotopy, samples, tol, out):
    """
    Smoothed pull-backs along the map whose cochain map is CHAINMAP
    (cochains of MODEL_A to cochains of MODEL_B).
    """
    raws, A = _load_pair(model_a, model_b, chainmap)
    n = _samples(samples)
    phis = _phis(phi_texts)
    inputs = [*raws, [p.coeffs for p in phis], n, tol]
    data = PullbackData.from_chain_map(A)
    rep = Report("pullback-verify")
    chain = A.check()
    if not chain.passed:
        rep.add(chain)
        _finish("pullback-verify", inputs, rep, out, summary="pullback-verify: FAIL: not a chain map")
    kw = {} if tol is None else {"tol": tol}
    for phi in phis:
        rep.add(pullback_check(data, phi, n))
    for i in range(len(phis)):
        for j in range(i + 1, len(phis)):
            rep.add(phi_independence_check(data, phis[i], phis[j], n, **kw))
    if back is not None:
        rb = io.load_json(back)
        inputs.append(rb)
        G = io.chain_map_from_json(rb, A.target, A.source)
        g_data = PullbackData.from_chain_map(G)
        K = None
        if homotopy is not None:
            rh = io.load_json(homotopy)
            inputs.append(rh)
            K = _homotopy_from_json(rh, A.source)
        trip = PullbackData(A.source, A.source, [g @ a for g, a in zip(G.A, A.A)], label="round trip")
        for phi in phis:
            rep.add(poincare_identity_check(trip, phi, K, n))
            if A.source.T is not None and A.target.T is not None:
                rep.add(duality_compat_check(data, phi, g_data, n, **kw))
                control = duality_compat_check(data, phi, g_data, n, negate_sign=True, **kw)
                neg = control.get("gamma-sign-rule-negated")
                rep.add(CheckResult("negated-sign-rejected", 0.0 if not neg.passed else 1.0, not neg.passed,
                                    details={"negated_violation": neg.max_violation, "phi": phi.label()}))
    _finish("pullback-verify", inputs, rep, out, {"phis": [p.label() for p in phis]})


def _homotopy_from_json(raw, c) -> list[ModuleMap]:
    if not isinstance(raw, dict) or raw.get("kind") != "chain-homotopy":
        raise io.FormatError("expected a chain-homotopy document")
    els = io._elements(raw.get("K"), "K")
    if len(els) != c.n:
        raise io.FormatError(f"chain homotopy needs {c.n} maps")
    maps = []
    for p, e in enumerate(els):
        if e.shape != (c.ranks[p], c.ranks[p + 1]):
            raise io.FormatError(f"K[{p}] has shape {e.shape}")
        maps.append(ModuleMap.from_matrix(io._as_kind(e, c.kind), c.kind))
    return maps


@main.command("morita-verify")
@click.argument("groupoid", type=click.Path(dir_okay=False))
@click.argument("morphisms", type=click.Path(dir_okay=False))
@click.option("--trials", type=click.IntRange(min=1), default=20, show_default=True)
@click.option("--band", type=click.IntRange(min=0), default=3, show_default=True,
              help="Largest degree of random arrows on z-graded groupoids.")
@seed_option
@out_option
@_parse_guard
def morita_verify(groupoid, morphisms, trials, band, seed, out):
    """Exact algebra, module and bimodule identities on random finitely supported elements."""
    rg, rm = io.load_json(groupoid), io.load_json(morphisms)
    g = io.groupoid_from_json(rg)
    items = io.morphisms_from_json(rm, g)
    rng = np.random.default_rng(seed)
    rep = identity_suite(g, items, rng, trials, band)
    _finish("morita-verify", [rg, rm, trials, band, seed], rep, out,
            {"groupoid": g.kind, "objects": g.m, "morphisms": [name for name, _, _ in items]})


@main.command("suite")
@seed_option
@samples_option
@click.option("--only", default=None, help="Comma separated section numbers (1-10).")
@click.option("--timings", is_flag=True, help="Include per-section wall-clock times (breaks byte equality).")
@out_option
def suite_cmd(seed, samples, only, timings, out):
    """Run every verification family on the standard models."""
    from .suite import SUITE_SECTIONS, run_suite

    n = _samples(samples)
    sel = None
    if only:
        try:
            sel = sorted({int(v) for v in only.split(",")})
        except ValueError:
            raise click.UsageError("--only takes comma separated integers")
        if any(not 1 <= v <= len(SUITE_SECTIONS) for v in sel):
            raise click.UsageError(f"sections are numbered 1-{len(SUITE_SECTIONS)}")
    sections = run_suite(seed, n, sel)
    passed = all(s.passed for s in sections)
    doc = {
        "command": "suite",
        "inputs_digest": io.digest(seed, n, sel),
        "pass": passed,
        "checks": [{"check": f"section {s.number}: {s.title}", "max_violation": s.to_json()["max_violation"],
                    "pass": s.passed} for s in sections],
        "notes": [],
        "results": {"seed": seed, "samples": n, "sections": [s.to_json(timings) for s in sections]},
    }
    _emit(doc, out)
    for s in sections:
        extra = f"  ({s.seconds:.1f} s)" if timings else ""
        click.echo(f"[{'PASS' if s.passed else 'FAIL'}] {s.number:2d} {s.title}{extra}", err=True)
    sys.exit(EXIT_OK if passed else EXIT_FAIL)


if __name__ == "__main__":
    main()
