#!/usr/bin/env python3
"""
Grasp Service CLI: детекция навешиваемости и захватов по мешу объекта.

    python -m grasp_service.main detect --mesh torus.obj --out grasps.json
    python -m grasp_service.main hang --mesh torus.obj
    python -m grasp_service.main viz --detect grasps.json --mesh torus.obj --out viz/
    python -m grasp_service.main synth --shape torus --param major_radius=0.05 --out shapes/
    python -m grasp_service.main serve --port 11000

Коды выхода: 0 успех, 1 ошибка, 2 ни одного захвата.
"""
import argparse
import logging
import signal
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from pydantic import ValidationError

from .app import configure_logging
from .core.config import PipelineConfig, load_pipeline_config
from .core.constants import ALLOWED_PROFILES, EXIT_ERROR, EXIT_NO_GRASP, EXIT_OK, SERVICE_HOST, SERVICE_PORT
from .core.errors import GraspServiceError, ShapeSpecError
from .services.export import build_detect_document, build_hang_document, read_document, write_document, write_viz
from .services.geometry import load_mesh
from .services.pipeline import run_detect, run_hang
from .services.synthetics import SHAPE_DEFAULTS, ShapeSpec, build_shape, write_shape

logger = logging.getLogger(__name__)


def _emit(text: str, out: Optional[str]) -> None:
    if not out:
        sys.stdout.write(text)


def _config_from_args(args) -> PipelineConfig:
    return load_pipeline_config(
        args.config,
        top_k=getattr(args, "top_k", None),
        seed=args.seed,
        profile=args.profile,
    )


def cmd_detect(args) -> int:
    config = _config_from_args(args)
    mesh = load_mesh(args.mesh)
    result = run_detect(mesh, config)
    document = build_detect_document(Path(args.mesh).name, config, result.stats, result.hangs, result.grasps)
    _emit(write_document(document, args.out), args.out)
    if not result.grasps:
        logger.warning("⚠️ No grasp found")
        return EXIT_NO_GRASP
    return EXIT_OK


def cmd_hang(args) -> int:
    config = _config_from_args(args)
    mesh = load_mesh(args.mesh)
    result = run_hang(mesh, config)
    document = build_hang_document(Path(args.mesh).name, config, result.stats, result.hangs)
    _emit(write_document(document, args.out), args.out)
    return EXIT_OK


def cmd_viz(args) -> int:
    config = load_pipeline_config(args.config)
    document = read_document(args.detect)
    mesh = load_mesh(args.mesh)
    try:
        write_viz(document, mesh, args.out, config)
    except (KeyError, TypeError) as e:
        raise ValueError(f"corrupt detect output {args.detect}: {e}") from e
    return EXIT_OK


def parse_params(items: Sequence[str]) -> Dict[str, float]:
    """['major_radius=0.05', ...] → {'major_radius': 0.05}."""
    params = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ShapeSpecError(f"--param expects key=value, got '{item}'")
        try:
            params[key.strip()] = float(value)
        except ValueError as e:
            raise ShapeSpecError(f"--param {key}: '{value}' is not a number") from e
    return params


def parse_viewpoint(text: str) -> Tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise ShapeSpecError(f"--partial-viewpoint expects x,y,z, got '{text}'")
    try:
        return tuple(float(p) for p in parts)  # type: ignore[return-value]
    except ValueError as e:
        raise ShapeSpecError(f"--partial-viewpoint '{text}' is not numeric") from e


def cmd_synth(args) -> int:
    spec = ShapeSpec(
        kind=args.shape,
        params=parse_params(args.param or []),
        resolution=args.resolution,
        seed=args.seed if args.seed is not None else 0,
        partial_viewpoints=[parse_viewpoint(v) for v in args.partial_viewpoint] or None,
    )
    mesh, truth = build_shape(spec)
    mesh_path, truth_path = write_shape(mesh, truth, args.out, args.format)
    print(mesh_path)
    print(truth_path)
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .app import create_app

    def handle_signal(signum, frame):
        print("\n🔻 Получен сигнал остановки, завершение работы...")
        sys.exit(EXIT_OK)

    signal.signal(signal.SIGINT, handle_signal)
    signal.signal(signal.SIGTERM, handle_signal)

    print(f"🚀 Запуск Grasp Service на {args.host}:{args.port}...")
    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def _add_pipeline_flags(parser: argparse.ArgumentParser, with_top_k: bool = True) -> None:
    parser.add_argument("--mesh", required=True, help="Путь к мешу (OBJ, PLY, STL; метры)")
    parser.add_argument("--config", default=None, help="Файл конфигурации (YAML, JSON, TOML)")
    parser.add_argument("--out", default=None, help="Выходной JSON (по умолчанию stdout)")
    if with_top_k:
        parser.add_argument("--top-k", dest="top_k", type=int, default=None, help="Сколько захватов вернуть (10)")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--profile", choices=ALLOWED_PROFILES, default=None, help="Профиль сканирования (задаёт d2)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="grasp_service", description="Grasping by hanging: hangability and hook-gripper grasps")
    parser.add_argument("-v", "--verbose", action="store_true", help="DEBUG-логи")
    sub = parser.add_subparsers(dest="command", required=True)

    detect = sub.add_parser("detect", help="Полный пайплайн: ранжированные захваты")
    _add_pipeline_flags(detect)
    detect.set_defaults(func=cmd_detect)

    hang = sub.add_parser("hang", help="Только детекция навешиваемости")
    _add_pipeline_flags(hang, with_top_k=False)
    hang.set_defaults(func=cmd_hang)

    viz = sub.add_parser("viz", help="Экспорт визуализации результата detect")
    viz.add_argument("--detect", required=True, help="JSON, записанный командой detect")
    viz.add_argument("--mesh", required=True)
    viz.add_argument("--config", default=None)
    viz.add_argument("--out", required=True, help="Каталог для PLY-файлов")
    viz.set_defaults(func=cmd_viz)

    synth = sub.add_parser("synth", help="Синтетическая форма с разметкой")
    synth.add_argument("--shape", required=True, choices=sorted(SHAPE_DEFAULTS))
    synth.add_argument("--param", action="append", metavar="KEY=VALUE")
    synth.add_argument("--resolution", type=int, default=64)
    synth.add_argument("--seed", type=int, default=None)
    synth.add_argument("--partial-viewpoint", dest="partial_viewpoint", action="append", default=[], metavar="X,Y,Z")
    synth.add_argument("--format", choices=["obj", "ply"], default="obj")
    synth.add_argument("--out", required=True, help="Выходной каталог")
    synth.set_defaults(func=cmd_synth)

    serve = sub.add_parser("serve", help="HTTP-сервис (uvicorn)")
    serve.add_argument("--host", default=SERVICE_HOST)
    serve.add_argument("--port", type=int, default=SERVICE_PORT)
    serve.set_defaults(func=cmd_serve)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging("DEBUG" if args.verbose else None)
    try:
        return args.func(args)
    except (GraspServiceError, OSError, ValueError, ValidationError) as e:
        message = str(e).splitlines()[0] if str(e) else type(e).__name__
        logger.error(f"❌ {args.command} failed: {message}")
        print(f"error: {message}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
