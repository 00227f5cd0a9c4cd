"""``rip-lab`` command-line interface.

Subcommands print JSON (or CSV for ``rip scaling``) and embed the hash of a
manifest describing their inputs, so any output file can be traced back to
the exact command that produced it.
"""

import argparse
import json
import sys

import numpy as np

from . import bounds
from .experiment import ConfigError, ExperimentConfig, _library_version, manifest_hash, run
from .groups import HeisenbergWeyl, parse_group, verify_isotropy
from .measurement import MeasurementOperator, draw_operator, gaussian_operator, parse_instrument
from .nets import gaussian_dual_tail_experiment, sphere_net, tensor_atoms
from .rip import ascent_rip, exact_canonical_rip, monte_carlo_rip
from .sparsity import CanonicalL1, parse_model


def _load_config(path):
    if path is None:
        return {}
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    return data


def _merge(config, args, names):
    """Flags override config fields; unset flags keep the config value."""
    out = dict(config)
    for name in names:
        value = getattr(args, name, None)
        if value is not None:
            out[name] = value
    return out


def _stamp(command, inputs, result):
    man = {"command": command, "inputs": inputs, "library": _library_version()}
    return {"manifest_hash": manifest_hash(man), "command": command, "inputs": inputs, **result}


def _emit(obj, path=None):
    text = json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def cmd_group_verify(args):
    rng = np.random.default_rng(args.seed)
    group = parse_group(args.group)
    devs = [verify_isotropy(group, mode=args.mode, trials=args.trials, rng=rng)
            for _ in range(args.probes)]
    worst = max(devs)
    passed = worst <= args.tol
    inputs = {"group": group.to_dict(), "mode": args.mode, "probes": args.probes,
              "trials": args.trials, "seed": args.seed, "tol": args.tol}
    _emit(_stamp("group verify", inputs, {"max_deviation": worst, "passed": passed}))
    return 0 if passed else 1


def _model_of(cfg):
    """Configured model, else the canonical l1 model on the group's space."""
    if cfg.get("model") is not None:
        return parse_model(cfg["model"])
    if cfg.get("group") in (None, "gaussian"):
        raise ConfigError("model", "required when no group fixes the dimension")
    return CanonicalL1(parse_group(cfg["group"]).N)


def _build_operator(cfg):
    rng = np.random.default_rng(cfg["seed"])
    if cfg.get("group") == "gaussian":
        model = _model_of(cfg)
        return gaussian_operator(model.size, int(cfg["m"]), rng)
    group = parse_group(cfg["group"])
    instrument = cfg.get("instrument", "ones")
    if cfg.get("elements") is not None:
        elements = cfg["elements"]
        if elements == "modulations":
            if not isinstance(group, HeisenbergWeyl):
                raise ConfigError("elements", "'modulations' needs a Heisenberg-Weyl group")
            elements = [(l, 0) for l in range(group.N)]
        inst = parse_instrument(instrument, group.N, rng=rng)
        return MeasurementOperator(group, inst, [tuple(e) if isinstance(e, list) else e
                                                 for e in elements])
    if cfg.get("m") is None:
        raise ConfigError("m", "required unless elements are given")
    return draw_operator(group, instrument, int(cfg["m"]), rng)


OPERATOR_FIELDS = ("group", "instrument", "model", "m", "seed", "elements")


def cmd_rip_estimate(args):
    cfg = _merge(_load_config(args.config), args,
                 OPERATOR_FIELDS + ("s", "method", "trials", "steps"))
    if "seed" not in cfg:
        raise ConfigError("seed", "required")
    cfg.setdefault("method", "monte_carlo")
    cfg.setdefault("trials", 1000)
    cfg.setdefault("steps", 50)
    cfg.setdefault("s", 1)
    model = _model_of(cfg)
    A = _build_operator(cfg)
    est_rng = np.random.default_rng([cfg["seed"], 1])
    if cfg["method"] == "exact":
        r = exact_canonical_rip(A, int(cfg["s"]))
    elif cfg["method"] == "monte_carlo":
        r = monte_carlo_rip(A, model, cfg["s"], int(cfg["trials"]), est_rng)
    elif cfg["method"] == "ascent":
        r = ascent_rip(A, model, cfg["s"], int(cfg["trials"]), int(cfg["steps"]), est_rng)
    else:
        raise ConfigError("method", f"unknown method {cfg['method']!r}")
    result = r.to_dict()
    result["seed"] = cfg["seed"]
    _emit(_stamp("rip estimate", cfg, {"estimate": result}), args.output)
    return 0


SCALING_FIELDS = ("seed", "model", "group", "instrument", "s_list", "m_list", "trials",
                  "redraws", "estimator", "steps", "experiment_id", "csv_path",
                  "manifest_path", "threads")


def cmd_rip_scaling(args):
    cfg = ExperimentConfig.from_dict(_merge(_load_config(args.config), args, SCALING_FIELDS))
    return run(cfg, stdout=sys.stdout)


def cmd_net_build(args):
    net = sphere_net(args.n, args.eps, rng=args.seed, validation_samples=args.validation_samples)
    inputs = {"n": args.n, "eps": args.eps, "seed": args.seed,
              "validation_samples": args.validation_samples}
    result = net.to_dict()
    result["min_separation"] = net.min_separation()
    if args.d is not None:
        atoms = tensor_atoms(net, args.d)
        result["tensor"] = {"d": args.d, "log_cardinality": atoms.log_cardinality,
                            "log_cardinality_bound": atoms.log_cardinality_bound}
    _emit(_stamp("net build", inputs, {"net": result}), args.output)
    return 0


def cmd_net_tail(args):
    rng = np.random.default_rng(args.seed)
    atoms = tensor_atoms(sphere_net(args.n, 1.0 / (3 * args.d), rng=rng), args.d)
    rows, ok = [], True
    for zeta in args.zeta:
        t = gaussian_dual_tail_experiment(args.n, args.d, args.draws, zeta, rng=rng, atoms=atoms)
        passed = t.deflated_rate <= zeta + 3 * t.sigma
        ok &= passed
        rows.append({"zeta": zeta, "threshold": t.threshold, "raw_rate": t.raw_rate,
                     "deflated_rate": t.deflated_rate, "sigma": t.sigma, "passed": passed})
    inputs = {"n": args.n, "d": args.d, "draws": args.draws, "zeta": args.zeta, "seed": args.seed}
    _emit(_stamp("net tail", inputs, {"results": rows}), args.output)
    return 0 if ok else 1


def cmd_bound_predict(args):
    th = args.theorem
    if th == "tensor":
        pred = bounds.tensor_m(args.n, args.d, args.s, args.delta, args.zeta, c=args.c)
    elif th == "gordon":
        pred = bounds.gordon_gaussian_m(args.n, args.d, args.delta, args.zeta, c=args.c)
    elif th == "polytope":
        pred = bounds.polytope_m(args.s, args.delta, args.zeta, args.M, args.incoherence,
                                 block_dim=args.block_dim, c=args.c)
    elif th == "dual-type":
        pred = bounds.dual_type_m(args.s, args.delta, args.zeta, args.eta_norm,
                                  args.type_constant or 1.0, p=args.p, c=args.c)
    else:
        if args.model is None:
            raise ConfigError("model", "required for the general theorem")
        params = bounds.BoundParams(s=args.s, delta=args.delta, zeta=args.zeta,
                                    block_dim=args.block_dim, p=args.p,
                                    type_constant=args.type_constant, c=args.c, C=args.C)
        pred = bounds.predict_m(params, parse_model(args.model), args.incoherence)
    result = pred.to_dict()
    _emit(_stamp("bound predict", result["inputs"], result))
    return 0


def cmd_op_export(args):
    cfg = _merge(_load_config(args.config), args, OPERATOR_FIELDS)
    if "seed" not in cfg:
        cfg["seed"] = 0
    A = _build_operator(cfg)
    dense = A.to_dense() if isinstance(A, MeasurementOperator) else A
    dense = np.asarray(dense, dtype="<c16")
    gram = dense.conj().T @ dense
    frame_dev = float(np.linalg.norm(gram - np.eye(gram.shape[0]), 2))
    h = manifest_hash({"command": "op export", "inputs": cfg, "library": _library_version()})
    bin_path = args.output + ".bin"
    with open(bin_path, "wb") as fh:
        fh.write(dense.tobytes(order="F"))
    header = {
        "manifest_hash": h,
        "inputs": cfg,
        "rows": dense.shape[0],
        "cols": dense.shape[1],
        "dtype": "complex128",
        "byte_order": "little",
        "layout": "column-major",
        "data": bin_path,
        "frame_deviation": frame_dev,
    }
    if isinstance(A, MeasurementOperator):
        header["operator"] = A.to_dict()
    _emit(header, args.output + ".json")
    _emit({"manifest_hash": h, "data": bin_path, "header": args.output + ".json",
           "shape": list(dense.shape), "frame_deviation": frame_dev})
    return 0


def _int_list(text):
    return [int(v) for v in text.split(",") if v]


def build_parser():
    p = argparse.ArgumentParser(prog="rip-lab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="area", required=True)

    grp = sub.add_parser("group").add_subparsers(dest="action", required=True)
    q = grp.add_parser("verify", help="check isotropy of a group action")
    q.add_argument("--group", required=True)
    q.add_argument("--mode", choices=("exact", "monte_carlo"), default="exact")
    q.add_argument("--probes", type=int, default=20)
    q.add_argument("--trials", type=int, default=1000)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--tol", type=float, default=1e-10)
    q.set_defaults(func=cmd_group_verify)

    rip = sub.add_parser("rip").add_subparsers(dest="action", required=True)
    q = rip.add_parser("estimate", help="estimate the RIP deviation of one operator")
    q.add_argument("--config")
    q.add_argument("--group")
    q.add_argument("--instrument")
    q.add_argument("--model")
    q.add_argument("--m", type=int)
    q.add_argument("--s", type=float)
    q.add_argument("--method", choices=("exact", "monte_carlo", "ascent"))
    q.add_argument("--trials", type=int)
    q.add_argument("--steps", type=int)
    q.add_argument("--seed", type=int)
    q.add_argument("--output")
    q.set_defaults(func=cmd_rip_estimate)

    q = rip.add_parser("scaling", help="median RIP deviation over an (s, m) grid")
    q.add_argument("--config")
    q.add_argument("--seed", type=int)
    q.add_argument("--model")
    q.add_argument("--group")
    q.add_argument("--instrument")
    q.add_argument("--s-list", dest="s_list", type=_int_list)
    q.add_argument("--m-list", dest="m_list", type=_int_list)
    q.add_argument("--trials", type=int)
    q.add_argument("--redraws", type=int)
    q.add_argument("--estimator", choices=("exact", "monte_carlo", "ascent"))
    q.add_argument("--steps", type=int)
    q.add_argument("--experiment-id", dest="experiment_id")
    q.add_argument("--csv", dest="csv_path")
    q.add_argument("--manifest", dest="manifest_path")
    q.add_argument("--threads", type=int)
    q.set_defaults(func=cmd_rip_scaling)

    net = sub.add_parser("net").add_subparsers(dest="action", required=True)
    q = net.add_parser("build", help="greedy epsilon-net on the real unit sphere")
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--eps", type=float, required=True)
    q.add_argument("--d", type=int, help="also report the rank-1 product set of this order")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--validation-samples", type=int, default=100_000)
    q.add_argument("--output")
    q.set_defaults(func=cmd_net_build)

    q = net.add_parser("tail", help="Gaussian dual-norm tail experiment")
    q.add_argument("--n", type=int, default=2)
    q.add_argument("--d", type=int, default=2)
    q.add_argument("--draws", type=int, default=400)
    q.add_argument("--zeta", type=float, action="append")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--output")
    q.set_defaults(func=cmd_net_tail)

    bnd = sub.add_parser("bound").add_subparsers(dest="action", required=True)
    q = bnd.add_parser("predict", help="sufficient number of measurements")
    q.add_argument("--theorem", choices=("general", "polytope", "dual-type", "tensor", "gordon"),
                   default="general")
    q.add_argument("--model")
    q.add_argument("--n", type=int)
    q.add_argument("--d", type=int)
    q.add_argument("--s", type=float, default=1.0)
    q.add_argument("--delta", type=float, default=0.5)
    q.add_argument("--zeta", type=float, default=0.1)
    q.add_argument("--M", type=int)
    q.add_argument("--p", type=float, default=2.0)
    q.add_argument("--block-dim", type=int, default=1)
    q.add_argument("--incoherence", type=float, default=1.0)
    q.add_argument("--eta-norm", type=float, default=1.0)
    q.add_argument("--type-constant", type=float)
    q.add_argument("--c", type=float, default=1.0)
    q.add_argument("--C", type=float, default=1.0)
    q.set_defaults(func=cmd_bound_predict)

    op = sub.add_parser("op").add_subparsers(dest="action", required=True)
    q = op.add_parser("export", help="write a dense operator as column-major complex128")
    q.add_argument("--config")
    q.add_argument("--group")
    q.add_argument("--instrument")
    q.add_argument("--model")
    q.add_argument("--m", type=int)
    q.add_argument("--seed", type=int)
    q.add_argument("--elements", help="'modulations' for all pure modulations of hw:N")
    q.add_argument("--output", required=True, help="path prefix for .bin and .json")
    q.set_defaults(func=cmd_op_export)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if getattr(args, "zeta", None) is None and args.func is cmd_net_tail:
        args.zeta = [0.5, 0.1]
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"rip-lab: config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, TypeError, KeyError, RuntimeError, OSError) as exc:
        print(f"rip-lab: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
