"""Golden-file regression of the report pipelines."""

import logging
import re
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from app.config.settings import settings
from app.models.schemas import ExperimentConfig
from app.services.experiment_service import run

logger = logging.getLogger(__name__)

MAX_DIFFS = 10

# (file name, command, config fields); output paths are filled in per run
GOLDEN_SUITE: list[tuple[str, str, dict]] = [
    ("rate_uniform.csv", "rate", {"dist": "1/2,1/2", "eps": "1/2,1/10", "n_max": 8}),
    ("rate_biased.csv", "rate", {"dist": "9/10,1/10", "eps": "1/20,1/50", "n_max": 12}),
    ("rate_pure.csv", "rate", {"dist": "1,0", "eps": "1/10", "n_max": 10}),
    ("codec_pure.json", "codec", {"dist": "1,0", "n": 3, "delta": "1/10", "samples": 4}),
    ("codec_biased.json", "codec", {"dist": "9/10,1/10", "n": 8, "delta": "1/2", "eps": "1/10"}),
    ("entropy_uniform.json", "entropy", {"dist": "1/2,1/2", "n_max": 4, "samples": 20}),
    ("entropy_biased.json", "entropy", {"dist": "9/10,1/10", "n_max": 6, "samples": 20}),
    ("steer.json", "steer", {"dist": "1/2,1/4,1/4", "samples": 12}),
    ("digitize.json", "digitize", {"a_size": 5, "b_size": 2, "n_max": 12}),
    ("counterexample.json", "counterexample", {"dist": "9/10,1/10", "eps": "1/10", "n_max": 4}),
    ("additivity.json", "additivity", {"dist": "1,0", "dist2": "1/2,1/2", "eps": "1/10", "n_max": 6}),
]

_TOKEN = re.compile(r"(-?\d+/\d+|-?\d+(?:\.\d*)?(?:[eE][-+]?\d+)?)")


@dataclass
class GoldenResult:
    passed: bool
    checked: list[str] = field(default_factory=list)
    diffs: list[str] = field(default_factory=list)


def generate(directory: str | Path, seed: int | None = None) -> list[Path]:
    """Run the golden suite, writing every report into ``directory``."""
    directory = Path(directory)
    files = []
    for name, command, fields in GOLDEN_SUITE:
        target = str(directory / name)
        fields = dict(fields)
        if seed is not None:
            fields["seed"] = seed
        fields["out" if name.endswith(".csv") else "report"] = target
        run(ExperimentConfig(**fields), command)
        files.append(Path(target))
    return files


def _line_diff(expected: str, actual: str, tolerance: float) -> bool:
    """True when two lines differ beyond exact-rational / float tolerance."""
    if expected == actual:
        return False
    left, right = _TOKEN.split(expected), _TOKEN.split(actual)
    if len(left) != len(right):
        return True
    for k, (a, b) in enumerate(zip(left, right)):
        if k % 2 == 0 or "/" in a or "/" in b:
            if a != b:
                return True
        elif abs(float(a) - float(b)) > tolerance:
            return True
    return False


def compare_file(expected: Path, actual: Path, tolerance: float | None = None) -> list[str]:
    tolerance = settings.tolerance if tolerance is None else tolerance
    if not expected.exists():
        return [f"{expected.name}: golden file missing"]
    want = expected.read_text(encoding="utf-8").splitlines()
    got = actual.read_text(encoding="utf-8").splitlines()
    diffs = []
    for line_no in range(max(len(want), len(got))):
        a = want[line_no] if line_no < len(want) else "<missing>"
        b = got[line_no] if line_no < len(got) else "<missing>"
        if _line_diff(a, b, tolerance):
            diffs.append(f"{expected.name}:{line_no + 1}: expected {a.strip()!r}, got {b.strip()!r}")
    return diffs


def golden_check(golden_dir: str | Path, seed: int | None = None) -> GoldenResult:
    """Regenerate every report and compare it with the stored golden copy.

    Exact rationals must match exactly; floats may differ by the configured
    tolerance. Only the first ten differences are reported.
    """
    golden_dir = Path(golden_dir)
    result = GoldenResult(passed=True)
    with tempfile.TemporaryDirectory() as tmp:
        for actual in generate(tmp, seed=seed):
            result.checked.append(actual.name)
            result.diffs.extend(compare_file(golden_dir / actual.name, actual))
    result.passed = not result.diffs
    result.diffs = result.diffs[:MAX_DIFFS]
    if result.passed:
        logger.info(f"Golden check passed ({len(result.checked)} reports)")
    else:
        logger.warning(f"Golden check failed: {len(result.diffs)} differences shown")
    return result


def update_goldens(golden_dir: str | Path) -> list[Path]:
    """Write a fresh golden set."""
    return generate(golden_dir)
