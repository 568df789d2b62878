"""Wall-clock comparison of duration-bounded and segment-bounded decoding."""
from __future__ import annotations

import statistics
import time
from dataclasses import dataclass

from .data_io.synthetic import generate_benchmark
from .segmental import constrained_decode, segmental_viterbi, theoretical_speedup


@dataclass(frozen=True)
class BenchResult:
    T: int
    C: int
    D: int
    K: int
    segviterbi_seconds: float
    constrained_seconds: float
    segviterbi_energy: float
    constrained_energy: float

    @property
    def measured_speedup(self) -> float:
        return self.segviterbi_seconds / self.constrained_seconds

    @property
    def theoretical_speedup(self) -> float:
        return theoretical_speedup(self.D, self.K)

    def rows(self):
        """``(algo, median seconds, energy, measured speedup, theoretical D/K)`` per decoder."""
        yield ("segviterbi", self.segviterbi_seconds, self.segviterbi_energy, 1.0, 1.0)
        yield (
            "constrained",
            self.constrained_seconds,
            self.constrained_energy,
            self.measured_speedup,
            self.theoretical_speedup,
        )


def _time(fn, reps: int) -> tuple[float, object]:
    out = fn()  # warm-up, also triggers kernel compilation
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times), out


def run_benchmark(
    T: int,
    C: int,
    K: int,
    D: int,
    reps: int = 3,
    seed: int = 0,
    snr: float = 1.0,
    K_true: int | None = None,
) -> BenchResult:
    """Time both decoders on the same generated instance; median over ``reps``.

    The instance has ``K_true`` ground-truth segments (``K`` by default) and
    its transition model is estimated from that ground truth.
    """
    if reps < 1:
        raise ValueError("reps must be positive")
    if not (1 <= K <= T and 1 <= D <= T):
        raise ValueError(f"need 1 <= K, D <= T (T={T}, K={K}, D={D})")
    S, _, model = generate_benchmark(T, C, K_true or K, snr, seed)
    sv_t, (_, sv_e) = _time(lambda: segmental_viterbi(S, model, D), reps)
    cd_t, (_, cd_e, _) = _time(lambda: constrained_decode(S, model, K), reps)
    return BenchResult(T, C, D, K, sv_t, cd_t, float(sv_e), float(cd_e))


__all__ = ["BenchResult", "run_benchmark"]
