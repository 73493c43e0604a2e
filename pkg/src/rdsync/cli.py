"""Command-line frontend.

Subcommands: certify, threshold, simulate-pde, simulate-net, spectral,
compare. Configuration is a JSON file; command-line flags override the
matching config keys. Reports are plain "key: value" text with numbers at 12
significant digits, and every report echoes its fully resolved configuration
on one line so a run can be reproduced exactly from its own output.

Exit codes: 0 success/feasible, 2 condition decided infeasible, 1 errors or
inconclusive outcomes.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import analytic, dynamics, envelope, lmi, sdpfeas, spectral
from .numerics import SymMat, sym_eigs


def _fmt(v: float) -> str:
    return f"{float(v):.12g}"


class _ConfigError(Exception):
    pass


def _load_config(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise _ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise _ConfigError(f"config {path} is not valid JSON: line {exc.lineno}") from exc


def _build_model(cfg: dict):
    """Returns (model, envelope, params or None)."""
    mc = cfg.get("model")
    if not isinstance(mc, dict):
        raise _ConfigError("config needs a 'model' section")
    if "name" in mc:
        name = mc["name"]
        params = mc.get("params", {})
        if name == "goodwin":
            p = envelope.GoodwinParams(**params)
            return envelope.goodwin_model(p), envelope.goodwin_envelope(p), p
        if name == "goldbeter":
            p = envelope.GoldbeterParams(**params)
            env = envelope.goldbeter_envelope(p, bool(mc.get("overparameterize", False)))
            return envelope.goldbeter_model(p), env, p
        if name == "fhn":
            p = envelope.FhnParams(**params)
            return envelope.fhn_model(p), envelope.fhn_envelope(p), p
        raise _ConfigError(f"unknown model name {name!r}")
    if "envelope" in mc:
        env = envelope.envelope_from_dict(mc["envelope"])
        return None, env, None
    raise _ConfigError("model section needs 'name' or 'envelope'")


def _coupling(cfg: dict, n: int) -> np.ndarray:
    cc = cfg.get("coupling")
    if not isinstance(cc, dict) or "d" not in cc:
        raise _ConfigError("config needs coupling.d")
    return lmi.diffusion_matrix(cc["d"], n)


def _resolve_lambda2(cfg: dict, override: float | None):
    """Returns (lambda2, provenance string, graph or None)."""
    sp = dict(cfg.get("spatial", {}))
    if override is not None:
        sp = {"lambda2": override}
    sources = [k for k in ("domain", "graph", "lambda2") if k in sp]
    if len(sources) != 1:
        raise _ConfigError(
            f"exactly one lambda2 source required (domain | graph | lambda2), got {sources}")
    if "lambda2" in sp:
        val = float(sp["lambda2"])
        tag = "user override" if override is not None else "explicit config value"
        return val, tag, None
    if "domain" in sp:
        dom = spectral.DomainSpec(sp["domain"]["kind"],
                                  tuple(sp["domain"]["lengths"]))
        return spectral.domain_lambda2(dom), (
            f"{dom.kind} domain, lengths {list(dom.lengths)}"), None
    gc = sp["graph"]
    directed = bool(gc.get("directed", False))
    if "edges" in gc:
        g = spectral.load_edge_list(gc["edges"], directed=directed)
    elif "adjacency" in gc:
        g = spectral.Graph(np.asarray(gc["adjacency"], dtype=float), directed=directed)
    else:
        raise _ConfigError("graph spec needs 'edges' or 'adjacency'")
    if directed:
        lam2 = spectral.directed_algebraic_connectivity(g)
        return lam2, f"directed graph with {g.n_nodes} nodes (symmetric-part value)", g
    return spectral.graph_lambda2(g), f"undirected graph with {g.n_nodes} nodes", g


def _solver_options(cfg: dict) -> sdpfeas.SolveOptions:
    sc = cfg.get("solver", {})
    return sdpfeas.SolveOptions(**sc) if sc else sdpfeas.SolveOptions()


def _echo_config(cfg: dict, out: list[str]) -> None:
    out.append("resolved-config: " + json.dumps(cfg, sort_keys=True, separators=(",", ":")))


def _emit(lines: list[str], out_path) -> None:
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _certificate_lines(cert: lmi.Certificate, out: list[str]) -> None:
    out.append(f"certificate-structure: {cert.structure}")
    out.append(f"margin: {_fmt(cert.margin)}")
    out.append(f"epsilon: {_fmt(cert.epsilon)}")
    w, _ = sym_eigs(cert.P)
    out.append(f"P-max-eig: {_fmt(w[-1])}")
    out.append(f"decay-rate-bound: {_fmt(-cert.epsilon / w[-1])}")
    for row in cert.P.a:
        out.append("P-row: " + " ".join(_fmt(v) for v in row))
    if cert.q:
        out.append("q: " + " ".join(_fmt(v) for v in cert.q))


def _save_certificate(cert: lmi.Certificate, path) -> None:
    data = {
        "structure": cert.structure,
        "P": cert.P.a.tolist(),
        "q": list(cert.q),
        "margin": cert.margin,
        "epsilon": cert.epsilon,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=1)
        fh.write("\n")


def _load_certificate(path) -> lmi.Certificate:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    return lmi.Certificate(data["structure"], SymMat(np.asarray(data["P"], dtype=float)),
                           tuple(data.get("q", ())), float(data.get("margin", math.nan)),
                           float(data.get("epsilon", math.nan)))


def _mu_equal_coupling(lam2: float, Dm: np.ndarray) -> float:
    d = np.diag(Dm)
    if np.any(Dm != np.diag(d)) or not np.all(d == d[0]):
        raise _ConfigError("this method needs identical per-species coupling")
    return lam2 * float(d[0])


def cmd_certify(cfg: dict, args) -> int:
    model, env, params = _build_model(cfg)
    method = args.method or cfg.get("method", "vertex")
    structure = args.structure or cfg.get("structure", "full")
    lam2, prov, graph = _resolve_lambda2(cfg, args.lambda2)
    Dm = _coupling(cfg, env.n)
    out = [f"command: certify", f"method: {method}", f"structure: {structure}",
           f"lambda2: {_fmt(lam2)}", f"lambda2-source: {prov}"]
    cfg = dict(cfg)
    cfg["method"], cfg["structure"] = method, structure
    if args.lambda2 is not None:
        cfg["spatial"] = {"lambda2": args.lambda2}
    code = 0
    cert = None

    if method in ("vertex", "composite"):
        if method == "vertex":
            prob = lmi.vertex_lmis(env, lam2, Dm, structure)
        else:
            prob = lmi.composite_lmi(env, lam2, Dm, structure)
        out.append(f"constraints: {len(prob.constraints)}")
        result = sdpfeas.solve_feasibility(prob, _solver_options(cfg))
        out.append(f"status: {result.status}")
        if result.status == "feasible":
            cert = result.certificate
            cert.epsilon = lmi.certified_epsilon(cert, env, lam2, Dm)
            _certificate_lines(cert, out)
            code = 0
        elif result.status == "infeasible":
            out.append(f"best-margin: {_fmt(result.best_margin)}")
            code = 2
        else:
            code = 1
    elif method == "secant":
        if params is None or not isinstance(params, envelope.GoodwinParams):
            raise _ConfigError("secant method is wired to the cyclic loop model")
        mu = _mu_equal_coupling(lam2, Dm)
        spec = analytic.CyclicSpec(
            (params.a1 + mu, params.a2 + mu, mu, 1.0),
            (params.b1, params.b2, 1.0, params.V1 / params.K1 ** 2))
        res = analytic.secant_criterion(spec)
        mu_star = analytic.goodwin_secant_threshold(params)
        out += [f"ratio: {_fmt(res.ratio)}", f"threshold: {_fmt(res.threshold)}",
                f"secant-mu-star: {_fmt(mu_star)}",
                f"status: {'feasible' if res.passes else 'infeasible'}"]
        code = 0 if res.passes else 2
    elif method == "othmer":
        res = analytic.othmer_check(env, lam2, Dm)
        out += [f"sup-jacobian-norm: {_fmt(res.sup_norm)}",
                f"required-bound: {_fmt(res.bound)}", f"norm-note: {res.note}",
                f"status: {'feasible' if res.passes else 'infeasible'}"]
        code = 0 if res.passes else 2
    else:
        raise _ConfigError(f"unknown method {method!r}")

    if cert is not None and graph is not None and graph.directed:
        pd = cert.P.a @ Dm
        sym_gap = float(np.abs(pd - pd.T).max())
        ok = sym_gap <= 1e-9 * max(1.0, float(np.abs(pd).max()))
        out.append(f"PD-symmetric: {'yes' if ok else 'no'} (gap {_fmt(sym_gap)}; "
                   "required for directed coupling)")
    if cert is not None and args.save_cert:
        _save_certificate(cert, args.save_cert)
        out.append(f"certificate-file: {args.save_cert}")
    _echo_config(cfg, out)
    _emit(out, args.out)
    return code


def cmd_threshold(cfg: dict, args) -> int:
    _, env, _ = _build_model(cfg)
    method = args.method or cfg.get("method", "composite")
    structure = args.structure or cfg.get("structure", "full")
    tc = cfg.get("threshold", {})
    if "bracket" not in tc:
        raise _ConfigError("config needs threshold.bracket = [lo, hi]")
    bracket = tuple(float(v) for v in tc["bracket"])
    tol = float(tc.get("tol", 1e-4))
    opts = _solver_options(cfg)
    structures = ("full", "diagonal") if structure == "both" else (structure,)
    out = [f"command: threshold", f"method: {method}",
           f"bracket: {_fmt(bracket[0])} {_fmt(bracket[1])}", f"tol: {_fmt(tol)}"]
    cfg = dict(cfg)
    cfg["method"], cfg["structure"] = method, structure

    for st in structures:
        if method == "vertex":
            def builder(mu, _st=st):
                return lmi.vertex_lmis(env, mu, np.eye(env.n), _st)
        elif method == "composite":
            def builder(mu, _st=st):
                return lmi.composite_lmi(env, mu, np.eye(env.n), _st)
        else:
            raise _ConfigError("threshold search supports vertex and composite methods")
        res = sdpfeas.threshold_search(builder, bracket, tol, opts)
        out.append(f"mu-star[{st}]: {_fmt(res.mu_star)}")
        out.append(f"solves[{st}]: {res.n_solves}")
    _echo_config(cfg, out)
    _emit(out, None)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("\n".join(out) + "\n")
    return 0


def _initial_state(sim: dict, rows: int, n: int, seed_override) -> np.ndarray:
    ic = sim.get("init")
    if not isinstance(ic, dict):
        raise _ConfigError("simulation.init section required")
    kind = ic.get("kind")
    if kind == "cosine":
        return dynamics.cosine_perturbation(ic["base"], float(ic["amplitude"]),
                                            rows, int(ic.get("mode", 2)))
    if kind == "random":
        seed = seed_override if seed_override is not None else ic.get("seed")
        if seed is None:
            raise _ConfigError("random init needs a seed (config or --seed)")
        return dynamics.random_states(rows, n, float(ic["lo"]), float(ic["hi"]),
                                      int(seed))
    if kind == "explicit":
        return np.asarray(ic["state"], dtype=float)
    raise _ConfigError(f"unknown init kind {kind!r}")


def _summarize(trace: dynamics.Trace, cert, out: list[str]) -> None:
    out.append(f"records: {trace.times.size}")
    out.append(f"blow-up: {'yes' if trace.blown_up else 'no'}")
    first, last = trace.nonuniformity[0], trace.nonuniformity[-1]
    out.append(f"nonuniformity-initial: {_fmt(first)}")
    out.append(f"nonuniformity-final: {_fmt(last)}")
    out.append(f"sync-error-final: {_fmt(trace.sync_error[-1])}")
    if first > 0:
        out.append(f"nonuniformity-ratio: {_fmt(last / first)}")
    if trace.blown_up or trace.times.size < 3:
        return
    try:
        fit = dynamics.fit_decay_rate(trace)
    except ValueError:
        out.append("decay-fit: unavailable (nonpositive diagnostic)")
        return
    out.append(f"fitted-rate: {_fmt(fit.rate)}")
    out.append(f"fit-r2: {_fmt(fit.r2)}")
    if fit.note:
        out.append(f"fit-note: {fit.note}")
    if cert is not None and not math.isnan(cert.epsilon):
        w, _ = sym_eigs(cert.P)
        bound = -cert.epsilon / float(w[-1])
        out.append(f"certificate-rate-bound: {_fmt(bound)}")
        try:
            vfit = dynamics.fit_decay_rate(trace, "lyapunov")
            out.append(f"lyapunov-fitted-rate: {_fmt(vfit.rate)}")
            verdict = "yes" if vfit.rate <= bound * 0.95 + 1e-12 else "no"
            out.append(f"decay-confirmed: {verdict}")
        except ValueError:
            out.append("lyapunov-fit: unavailable")


def cmd_simulate_pde(cfg: dict, args) -> int:
    model, _, _ = _build_model(cfg)
    if model is None:
        raise _ConfigError("simulation needs a built-in model with dynamics")
    sim = cfg.get("simulation")
    if not isinstance(sim, dict):
        raise _ConfigError("config needs a 'simulation' section")
    Dm = _coupling(cfg, model.n)
    grid = dynamics.PdeGrid(float(sim["L"]), int(sim["m"]))
    init = _initial_state(sim, grid.m, model.n, args.seed)
    cert = _load_certificate(args.cert) if args.cert else None
    trace = dynamics.simulate_pde(
        model, Dm, grid, float(sim["T"]),
        dt=float(sim["dt"]) if "dt" in sim else None,
        init=init, stepper=sim.get("stepper", "strang"), certificate=cert,
        record_every=int(sim["record_every"]) if "record_every" in sim else None,
        workers=int(sim.get("workers", 1)))
    out = ["command: simulate-pde", f"model: {model.name}",
           f"grid: L={_fmt(grid.L)} m={grid.m}", f"dt: {_fmt(trace.dt)}"]
    _summarize(trace, cert, out)
    cfg = dict(cfg)
    if args.seed is not None:
        cfg.setdefault("simulation", {}).setdefault("init", {})
        cfg["simulation"]["init"]["seed"] = args.seed
    _echo_config(cfg, out)
    if args.out:
        dynamics.export_trace_csv(trace, args.out,
                                  include_state=bool(sim.get("include_state", False)))
        out.append(f"csv: {args.out}")
    _emit(out, None)
    return 0


def cmd_simulate_net(cfg: dict, args) -> int:
    model, _, _ = _build_model(cfg)
    if model is None:
        raise _ConfigError("simulation needs a built-in model with dynamics")
    sim = cfg.get("simulation")
    if not isinstance(sim, dict):
        raise _ConfigError("config needs a 'simulation' section")
    _, prov, graph = _resolve_lambda2(cfg, None)
    if graph is None:
        raise _ConfigError("simulate-net needs spatial.graph")
    Dm = _coupling(cfg, model.n)
    init = _initial_state(sim, graph.n_nodes, model.n, args.seed)
    cert = _load_certificate(args.cert) if args.cert else None
    trace = dynamics.simulate_network(
        model, Dm, graph, float(sim["T"]),
        dt=float(sim["dt"]) if "dt" in sim else None,
        init=init, certificate=cert,
        record_every=int(sim["record_every"]) if "record_every" in sim else None,
        workers=int(sim.get("workers", 1)))
    out = ["command: simulate-net", f"model: {model.name}",
           f"nodes: {graph.n_nodes}", f"graph: {prov}", f"dt: {_fmt(trace.dt)}"]
    _summarize(trace, cert, out)
    cfg = dict(cfg)
    if args.seed is not None:
        cfg.setdefault("simulation", {}).setdefault("init", {})
        cfg["simulation"]["init"]["seed"] = args.seed
    _echo_config(cfg, out)
    if args.out:
        dynamics.export_trace_csv(trace, args.out,
                                  include_state=bool(sim.get("include_state", False)))
        out.append(f"csv: {args.out}")
    _emit(out, None)
    return 0


def cmd_spectral(cfg: dict, args) -> int:
    lam2, prov, graph = _resolve_lambda2(cfg, args.lambda2)
    out = ["command: spectral", f"lambda2: {_fmt(lam2)}", f"lambda2-source: {prov}"]
    if graph is not None:
        out.append(f"nodes: {graph.n_nodes}")
        out.append(f"directed: {'yes' if graph.directed else 'no'}")
    _echo_config(dict(cfg), out)
    _emit(out, args.out)
    return 0


def cmd_compare(cfg: dict, args) -> int:
    model, env, params = _build_model(cfg)
    lam2, prov, _ = _resolve_lambda2(cfg, args.lambda2)
    Dm = _coupling(cfg, env.n)
    opts = _solver_options(cfg)
    out = ["command: compare", f"lambda2: {_fmt(lam2)}", f"lambda2-source: {prov}"]

    oth = analytic.othmer_check(env, lam2, Dm)
    out.append(f"othmer: sup={_fmt(oth.sup_norm)} bound={_fmt(oth.bound)} "
               f"pass={'yes' if oth.passes else 'no'}")

    if params is not None and isinstance(params, envelope.GoodwinParams):
        try:
            mu = _mu_equal_coupling(lam2, Dm)
        except _ConfigError:
            mu = None
        if mu is not None:
            spec = analytic.CyclicSpec(
                (params.a1 + mu, params.a2 + mu, mu, 1.0),
                (params.b1, params.b2, 1.0, params.V1 / params.K1 ** 2))
            res = analytic.secant_criterion(spec)
            mu_star = analytic.goodwin_secant_threshold(params)
            out.append(f"secant: ratio={_fmt(res.ratio)} threshold={_fmt(res.threshold)} "
                       f"pass={'yes' if res.passes else 'no'} mu-star={_fmt(mu_star)}")

    for method, structure in (("vertex", "full"), ("composite", "diagonal")):
        if method == "vertex":
            prob = lmi.vertex_lmis(env, lam2, Dm, structure)
        else:
            prob = lmi.composite_lmi(env, lam2, Dm, structure)
        result = sdpfeas.solve_feasibility(prob, opts)
        line = f"lmi-{method}-{structure}: status={result.status}"
        if result.status == "feasible":
            line += f" margin={_fmt(result.certificate.margin)}"
        out.append(line)
    _echo_config(dict(cfg), out)
    _emit(out, args.out)
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage errors; 2 means infeasible here
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="rdsync",
                     description="certify and simulate spatially uniform behavior")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("certify", cmd_certify), ("threshold", cmd_threshold),
                     ("simulate-pde", cmd_simulate_pde),
                     ("simulate-net", cmd_simulate_net),
                     ("spectral", cmd_spectral), ("compare", cmd_compare)):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--method", choices=("vertex", "composite", "secant", "othmer"))
        p.add_argument("--structure", choices=("full", "diagonal", "both"))
        p.add_argument("--lambda2", type=float)
        p.add_argument("--out")
        p.add_argument("--seed", type=int)
        p.add_argument("--cert", help="certificate JSON to compare simulations against")
        p.add_argument("--save-cert", help="write the found certificate as JSON")
        p.set_defaults(fn=fn)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args.config)
        return args.fn(cfg, args)
    except (_ConfigError, ValueError, KeyError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
