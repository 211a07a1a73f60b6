"""Argument types and helpers shared by the subcommands."""

import argparse
from pathlib import Path
from typing import List, Type, TypeVar

from pydantic import BaseModel, ValidationError

from bayesqst.exceptions import OutputError, UsageError

ModelT = TypeVar("ModelT", bound=BaseModel)


def positive_int(value: str) -> int:
    number = int(value)
    if number < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return number


def non_negative_int(value: str) -> int:
    number = int(value)
    if number < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {value}")
    return number


def seed_int(value: str) -> int:
    number = int(value, 0)
    if not 0 <= number < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed must lie in [0, 2^64), got {value}")
    return number


def int_list(value: str) -> List[int]:
    """Comma-separated positive integers, e.g. ``1,4,16``."""
    try:
        numbers = [int(part) for part in value.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {value}")
    if not numbers or any(n < 1 for n in numbers):
        raise argparse.ArgumentTypeError(f"expected positive integers, got {value}")
    return numbers


def build_model(model_cls: Type[ModelT], **fields) -> ModelT:
    """Validate option values through a pydantic model; failures are usage errors."""
    try:
        return model_cls(**fields)
    except ValidationError as exc:
        raise UsageError(f"Invalid options: {exc}")


def sibling_path(path: Path, suffix: str) -> Path:
    """``out.json`` -> ``out<suffix>.json`` in the same directory."""
    path = Path(path)
    return path.with_name(f"{path.stem}{suffix}{path.suffix or '.json'}")


def ensure_parent(path: Path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"Cannot create directory {path.parent}: {exc}")
    return path
