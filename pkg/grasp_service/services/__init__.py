from .pipeline import DetectResult, HangResult, run_detect, run_hang

__all__ = ["DetectResult", "HangResult", "run_detect", "run_hang"]
