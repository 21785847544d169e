"""Command-line client for the experiment service.

Every subcommand builds a request, validates it against the service
schemas (so config typos fail fast with exit code 2), and sends it to the
service: by default an in-process application instance, or a remote server
via --server. Results are printed as JSON on stdout; files land in the
configured output directory (overridable with SCORESEL_OUTPUT_DIR).

Exit codes: 0 success, 1 runtime failure, 2 bad configuration.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from pydantic import ValidationError

from .service import schemas

log = logging.getLogger("scoresel")


def _client(server: str | None):
    if server:
        import httpx

        return httpx.Client(base_url=server, timeout=None)
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DeprecationWarning)
        from fastapi.testclient import TestClient

    from .service import app

    return TestClient(app)


def _fail(code: int, message: str):
    print(f"error: {message}", file=sys.stderr)
    raise SystemExit(code)


def _validation_message(err: ValidationError) -> str:
    first = err.errors()[0]
    loc = ".".join(str(p) for p in first["loc"])
    if first["type"] == "extra_forbidden":
        return f"unknown config key: {loc}"
    return f"invalid config at {loc}: {first['msg']}"


def _load_config(path: str, out_override: str | None) -> schemas.RunConfig:
    try:
        with open(path, encoding="utf-8") as f:
            raw = json.load(f)
    except FileNotFoundError:
        _fail(2, f"config file not found: {path}")
    except json.JSONDecodeError as err:
        _fail(2, f"config file {path} is not valid JSON: {err}")
    if out_override:
        raw["output_dir"] = out_override
    try:
        cfg = schemas.RunConfig.model_validate(raw)
    except ValidationError as err:
        _fail(2, _validation_message(err))
    _log_sources(cfg)
    return cfg


def _log_sources(model, prefix: str = "") -> None:
    for name in type(model).model_fields:
        value = getattr(model, name)
        if isinstance(value, schemas.StrictModel):
            _log_sources(value, f"{prefix}{name}.")
        else:
            src = "user" if name in model.model_fields_set else "default"
            log.info("config %s%s = %r (%s)", prefix, name, value, src)


def _post(client, path: str, payload) -> dict:
    resp = client.post(path, json=payload)
    if resp.status_code == 422:
        detail = resp.json().get("detail", [])
        if detail and detail[0].get("type") == "extra_forbidden":
            loc = ".".join(str(p) for p in detail[0]["loc"] if p != "body")
            _fail(2, f"unknown config key: {loc}")
        _fail(2, f"invalid request: {detail}")
    if resp.status_code != 200:
        try:
            detail = resp.json().get("detail", resp.text)
        except ValueError:
            detail = resp.text
        _fail(1, str(detail))
    return resp.json()


def _print(result: dict) -> None:
    print(json.dumps(result, sort_keys=True, indent=1))


def _csv_floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _csv_ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scoresel",
        description="Scored top-k feature selection experiments",
    )
    parser.add_argument("--server", help="remote service URL (default: in-process)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_config(p):
        p.add_argument("--config", required=True, help="RunConfig JSON file")
        p.add_argument("--out", help="override the configured output directory")
        return p

    with_config(sub.add_parser("train", help="train on the configured dataset"))

    p = sub.add_parser("select", help="top-k selection from a params file")
    p.add_argument("--params", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out", help="write the selection as a JSON index list")

    p = with_config(sub.add_parser("eval", help="evaluate a params file"))
    p.add_argument("--params", required=True)

    p = with_config(sub.add_parser("oracle", help="exhaustive best-subset search"))
    p.add_argument("--k", type=int, help="override train.k")

    for name, flag in (("sweep-n", "--values"), ("sweep-lambda", "--values"), ("sweep-k", "--values")):
        p = with_config(sub.add_parser(name, help=f"{name} experiment"))
        p.add_argument(flag, required=True, help="comma-separated grid")
        p.add_argument("--subsample", type=int, help="shrink the train split first")
        p.add_argument("--sweep-seed", type=int, default=0)

    p = with_config(sub.add_parser("beta", help="leave-one-out stability estimate"))
    p.add_argument("--n-values", required=True, help="comma-separated train sizes")
    p.add_argument("--deletions", type=int, default=1)
    p.add_argument("--sweep-seed", type=int, default=0)

    p = with_config(sub.add_parser("overlap", help="selection overlap across split seeds"))
    p.add_argument("--seeds", required=True, help="comma-separated split seeds")

    p = sub.add_parser("gen-synth", help="write a planted-feature dataset")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--informative", type=int, required=True)
    p.add_argument("--noise", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--classes", type=int, default=2)
    p.add_argument("--out", default="runs")

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
    )
    client = _client(args.server)

    cmd = args.command
    if cmd == "train":
        cfg = _load_config(args.config, args.out)
        result = _post(client, "/train", cfg.model_dump())
    elif cmd == "select":
        req = schemas.SelectRequest(params_path=args.params, k=args.k, output_path=args.out)
        result = _post(client, "/select", req.model_dump())
    elif cmd == "eval":
        cfg = _load_config(args.config, args.out)
        req = schemas.EvalRequest(config=cfg, params_path=args.params)
        result = _post(client, "/eval", req.model_dump())
    elif cmd == "oracle":
        cfg = _load_config(args.config, args.out)
        req = schemas.OracleRequest(config=cfg, k=args.k)
        result = _post(client, "/oracle", req.model_dump())
    elif cmd in ("sweep-n", "sweep-lambda", "sweep-k"):
        cfg = _load_config(args.config, args.out)
        req = schemas.SweepRequest(
            config=cfg,
            values=_csv_floats(args.values),
            sweep_seed=args.sweep_seed,
            train_subsample=args.subsample,
        )
        path = {"sweep-n": "/sweep/n", "sweep-lambda": "/sweep/lambda1", "sweep-k": "/sweep/k"}[cmd]
        result = _post(client, path, req.model_dump())
    elif cmd == "beta":
        cfg = _load_config(args.config, args.out)
        req = schemas.BetaRequest(
            config=cfg,
            n_values=_csv_ints(args.n_values),
            deletions_per_n=args.deletions,
            sweep_seed=args.sweep_seed,
        )
        result = _post(client, "/beta", req.model_dump())
    elif cmd == "overlap":
        cfg = _load_config(args.config, args.out)
        req = schemas.OverlapRequest(config=cfg, seeds=_csv_ints(args.seeds))
        result = _post(client, "/overlap", req.model_dump())
    elif cmd == "gen-synth":
        req = schemas.GenSynthRequest(
            m=args.m,
            n=args.n,
            n_informative=args.informative,
            noise=args.noise,
            seed=args.seed,
            n_classes=args.classes,
            output_dir=args.out,
        )
        result = _post(client, "/gen-synth", req.model_dump())
    else:  # pragma: no cover
        _fail(2, f"unknown command {cmd}")

    _print(result)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
