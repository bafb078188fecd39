"""cProfile wrapper for long sweeps."""

import cProfile
import io
import logging
import pstats
import time
from contextlib import contextmanager
from datetime import datetime
from pathlib import Path
from typing import Iterator

from app.config.settings import settings

# Dedicated profiling logger
profiling_logger = logging.getLogger("app.profiling")


@contextmanager
def profiled(
    label: str,
    enabled: bool = True,
    top_results: int = 10,
    save_binary: bool = False,
    profiles_dir: str | Path | None = None,
) -> Iterator[cProfile.Profile | None]:
    """Profile the enclosed block and log the top functions by total time.

    Args:
        label: Name used in the log line and the binary file name
        enabled: When False the block runs unprofiled
        top_results: Number of top functions to display in stats (default: 10)
        save_binary: Whether to save a binary .prof file (viewable with snakeviz)
        profiles_dir: Directory for binary profiles (default: settings.profiles_dir)

    Yields:
        The active profiler, or None when disabled
    """
    if not enabled:
        yield None
        return

    profiler = cProfile.Profile()
    start_time = time.time()
    profiler.enable()
    try:
        yield profiler
    finally:
        profiler.disable()
        duration = time.time() - start_time
        _log_profile_stats(profiler, label, duration, top_results)
        if save_binary:
            directory = Path(profiles_dir or settings.profiles_dir)
            directory.mkdir(exist_ok=True, parents=True)
            timestamp = datetime.now().strftime("%Y%m%d_%H%M%S_%f")
            profile_file = directory / f"{timestamp}_{label}.prof"
            profiler.dump_stats(str(profile_file))
            profiling_logger.info(f"Binary profile saved to: {profile_file}")


def _log_profile_stats(
    profiler: cProfile.Profile, label: str, duration: float, top_results: int
) -> None:
    # Sort by total time and get top results
    stream = io.StringIO()
    stats = pstats.Stats(profiler, stream=stream)
    stats.sort_stats(pstats.SortKey.TIME)
    stats.print_stats(top_results)

    profiling_logger.info(
        f"Profile for {label} (Duration : {duration: .4f}s): \n{stream.getvalue()}"
    )
