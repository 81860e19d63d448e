"""Benchmark the numba kernels against their pure-numpy twins.

Runs the labeling simulation and the batched loss kernels at a few sizes
and prints a timing table.  Usage:

    python benchmarks/bench_backends.py [--events N] [--repeat R]
"""

import argparse
import time

import numpy as np

from qalabel import backend
from qalabel.combinatorics import ClassSpace
from qalabel.labeling import AnnotatorModel, QuestionSpec, QuestionType, simulate_arrays
from qalabel.losses import mae_matrix, membership_matrix


def time_call(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--events", type=int, default=1_000_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    backends = ["numpy"]
    if backend.numba_available():
        backends.append("numba")
    else:
        print("numba unavailable; benchmarking numpy only")

    K = 10
    space = ClassSpace(K)
    ann = AnnotatorModel.stochastic(space, np.arange(1, K + 1) / 55.0)
    rng = np.random.default_rng(0)
    n_loss = min(args.events, 200_000)
    raw = rng.uniform(size=(n_loss, K))
    scores = raw / raw.sum(axis=1, keepdims=True)
    base = mae_matrix(scores)
    masks = rng.integers(1, 2**K, size=n_loss).astype(np.uint64)
    member = membership_matrix(masks, K)

    rows = []
    for name in backends:
        kern = backend.get_kernels(name)
        # warm up (jit compile) outside the timed region
        simulate_arrays(0, QuestionSpec(QuestionType.WHICH_ONE, 3, space), ann, 100, kernel_backend=name)
        kern.qa_loss_values(base[:100], member[:100], 0.5)
        kern.qa_score_grad(scores[:100], member[:100], 0.5)

        for I in (1, 5, 9):
            t = time_call(
                lambda: kern.draw_question_sets(np.uint64(7), 0, args.events, K, I),
                args.repeat,
            )
            rows.append((f"draw_question_sets K={K} I={I} n={args.events}", name, t))
        spec = QuestionSpec(QuestionType.WHICH_ONE, 5, space)
        t = time_call(
            lambda: simulate_arrays(7, spec, ann, args.events, kernel_backend=name),
            args.repeat,
        )
        rows.append((f"simulate end-to-end K={K} I=5 n={args.events}", name, t))
        rows.append(
            (f"qa_loss_values n={n_loss}", name, time_call(lambda: kern.qa_loss_values(base, member, 0.5), args.repeat))
        )
        rows.append(
            (f"qa_score_grad n={n_loss}", name, time_call(lambda: kern.qa_score_grad(scores, member, 0.5), args.repeat))
        )

    width = max(len(r[0]) for r in rows)
    print(f"{'kernel':<{width}}  backend  best_seconds")
    for label, name, t in rows:
        print(f"{label:<{width}}  {name:<7}  {t:.4f}")

    if len(backends) == 2:
        print("\nspeedups (numpy / numba):")
        by_label = {}
        for label, name, t in rows:
            by_label.setdefault(label, {})[name] = t
        for label, d in by_label.items():
            print(f"  {label}: {d['numpy'] / d['numba']:.2f}x")


if __name__ == "__main__":
    main()
