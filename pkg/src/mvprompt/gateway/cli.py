"""Command line entry points: serve, score-batch, mock-demo, replay."""

from __future__ import annotations

import argparse
import json
import sys
import tempfile
from pathlib import Path

from ..config import engine_config_from_dict
from ..errors import EngineError
from ..imaging import RasterImage
from ..judge import VerdictCache
from ..orchestrator import Engine, SessionStore, canonical_json, evaluate_candidate
from ..providers.factory import build_providers
from ..scoring import MultiViewSet
from .app import create_app


def load_config(path: str | None) -> dict:
    """Read the engine/provider config file (JSON, or TOML when available)."""
    if path is None:
        return {}
    text = Path(path).read_text(encoding="utf-8")
    if path.endswith(".toml"):
        try:
            import tomllib  # 3.11+
        except ModuleNotFoundError:
            import tomli as tomllib
        return tomllib.loads(text)
    return json.loads(text)


def cmd_serve(args) -> int:
    import uvicorn

    config = load_config(args.config)
    engine = Engine(SessionStore(args.store))
    app = create_app(engine, default_providers_config=config.get("providers", {}))
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def _load_view_set(set_dir: Path) -> list[RasterImage]:
    views = []
    for i in range(9):
        path = set_dir / f"view_{i}.png"
        if not path.exists():
            raise FileNotFoundError(f"{path} missing (expected view_0.png .. view_8.png)")
        views.append(RasterImage.from_file(path))
    return views


def cmd_score_batch(args) -> int:
    """Score a directory of 9-view sets.

    Input layout: <in>/<name>/view_0.png..view_8.png plus either
    <in>/prompts.json mapping name to prompt text or <name>/prompt.txt.
    One report JSON is written per set; partial results are flushed even
    when later sets fail.
    """
    config = load_config(args.config)
    engine_config = engine_config_from_dict(config.get("engine", {}))
    providers = build_providers(config.get("providers", {}), seed=args.seed)
    in_dir, out_dir = Path(getattr(args, "in")), Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    cache = VerdictCache(out_dir / "cache")

    prompts_path = in_dir / "prompts.json"
    prompt_map = json.loads(prompts_path.read_text()) if prompts_path.exists() else {}

    set_dirs = sorted(p for p in in_dir.iterdir() if p.is_dir())
    failures = 0
    written = 0
    for set_dir in set_dirs:
        name = set_dir.name
        try:
            prompt = prompt_map.get(name)
            if prompt is None:
                prompt_file = set_dir / "prompt.txt"
                if not prompt_file.exists():
                    raise FileNotFoundError(f"no prompt for {name}: add prompts.json or {prompt_file}")
                prompt = prompt_file.read_text().strip()
            views = _load_view_set(set_dir)
            mv = MultiViewSet(name, tuple(views))
            ev = evaluate_candidate(mv, prompt, providers, engine_config, cache)
            report = {
                "schema": "score-report/1",
                "candidate_id": name,
                "prompt": prompt,
                "three_d_friendly": ev.gate,
                "grayed": ev.grayed,
                "unscorable": ev.unscorable,
                "score_vector": ev.score_vector,
                "defect_map": ev.defect_map,
                "satellite": ev.satellite,
            }
            out_path = out_dir / f"{name}.report.json"
            out_path.write_text(canonical_json(report) + "\n", encoding="utf-8")
            written += 1
            print(f"scored {name} -> {out_path}")
        except (EngineError, OSError, ValueError) as exc:
            failures += 1
            print(f"error: {name}: {exc}", file=sys.stderr)
    print(f"{written} report(s) written, {failures} failure(s)")
    return 0 if failures == 0 and written > 0 else 1


def cmd_mock_demo(args) -> int:
    """One seeded end-to-end iteration against mocks; prints the gallery.

    Output is fully deterministic for a given seed: identical reruns print
    identical bytes and write byte-identical stores.
    """
    store_dir = args.store or tempfile.mkdtemp(prefix="mvprompt-demo-")
    engine = Engine(SessionStore(store_dir))
    session = engine.create_session(seed=args.seed)
    iteration = engine.run_iteration(
        session.id, args.prompt, n=args.n, branches=["generation", "retrieval"]
    )
    print(f"session {session.id} seed {session.seed}")
    print(f"iteration {iteration.index}: {iteration.status}, {len(iteration.candidates)} candidates")
    print(f"{'candidate':<28} {'branch':<10} {'gate':>6} {'gray':>5}  prompt")
    for c in iteration.candidates:
        gate = f"{c.gate['total']:.3f}" if c.gate else "-"
        print(f"{c.id:<28} {c.branch:<10} {gate:>6} {str(c.grayed):>5}  {c.prompt.text[:60]}")
    try:
        recs = engine.recommendations(session.id, None)[:8]
        print("top keywords: " + ", ".join(r["keyword"] for r in recs))
    except EngineError:
        print("top keywords: (none)")
    return 0


def cmd_replay(args) -> int:
    engine = Engine(SessionStore(args.store))
    with tempfile.TemporaryDirectory(prefix="mvprompt-replay-") as scratch:
        ok, message = engine.replay(args.session, scratch)
    print(message)
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mvprompt", description="multi-view prompt engineering engine")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the HTTP API")
    serve.add_argument("--config", default=None, help="JSON or TOML config file")
    serve.add_argument("--store", default="store", help="session store directory")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8400)
    serve.set_defaults(func=cmd_serve)

    batch = sub.add_parser("score-batch", help="score a directory of 9-view sets")
    batch.add_argument("--in", required=True, help="input directory of view sets")
    batch.add_argument("--out", required=True, help="output directory for reports")
    batch.add_argument("--config", default=None)
    batch.add_argument("--seed", type=int, default=0)
    batch.set_defaults(func=cmd_score_batch)

    demo = sub.add_parser("mock-demo", help="run one seeded iteration against mocks")
    demo.add_argument("--seed", type=int, default=7)
    demo.add_argument("--prompt", default="a pink cat")
    demo.add_argument("--n", type=int, default=16)
    demo.add_argument("--store", default=None, help="store directory (temp dir when omitted)")
    demo.set_defaults(func=cmd_mock_demo)

    replay = sub.add_parser("replay", help="re-execute a stored session and diff")
    replay.add_argument("--session", required=True)
    replay.add_argument("--store", default="store")
    replay.set_defaults(func=cmd_replay)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except EngineError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
