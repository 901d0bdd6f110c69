#!/usr/bin/env python3
"""Compare the compiled kernels against the pure-Python fallbacks.

Times the two hot paths: LZ phrase extraction / sketching over random
megabyte streams, and the three-party circuit evaluation behind
possession proofs.

    python benchmarks/bench_kernels.py [--mb 4] [--proof-rounds 8]
"""

from __future__ import annotations

import argparse
import random
import time

import aiid.lzjd._pure as lzjd_pure
import aiid.zkboo._pure as zkboo_pure
from aiid import zkboo
from aiid.identity import Commitment, IssuerNamespace, derive_ai_id

try:
    import aiid.lzjd._ckernel as lzjd_compiled
except ImportError:
    lzjd_compiled = None
try:
    import aiid.zkboo._ckernel as zkboo_compiled
except ImportError:
    zkboo_compiled = None


def timeit(fn, repeat: int = 3) -> float:
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def report(name: str, pure_seconds: float, compiled_seconds: float | None) -> None:
    if compiled_seconds is None:
        print(f"{name:<38} pure {pure_seconds * 1e3:9.2f} ms   compiled unavailable")
    else:
        ratio = pure_seconds / compiled_seconds
        print(
            f"{name:<38} pure {pure_seconds * 1e3:9.2f} ms   "
            f"compiled {compiled_seconds * 1e3:9.2f} ms   ({ratio:6.1f}x)"
        )


def bench_lzjd(megabytes: int) -> None:
    rng = random.Random(42)
    data = rng.randbytes(megabytes << 20)
    report(
        f"lzjd phrases ({megabytes} MB random)",
        timeit(lambda: lzjd_pure.phrases(data), repeat=1),
        timeit(lambda: lzjd_compiled.phrases(data)) if lzjd_compiled else None,
    )
    report(
        f"lzjd phrase hashes ({megabytes} MB)",
        timeit(lambda: lzjd_pure.phrase_hashes(data), repeat=1),
        timeit(lambda: lzjd_compiled.phrase_hashes(data)) if lzjd_compiled else None,
    )


def bench_zkboo(rounds: int) -> None:
    rng = random.Random(43)
    ns8 = b"OWNER001"
    h = rng.randbytes(32)
    seeds = [rng.randbytes(16) for _ in range(3)]
    tapes = [zkboo.expand_tape(seed) for seed in seeds]
    s0, s1 = tapes[0][:32], tapes[1][:32]
    s2 = bytes(a ^ b ^ c for a, b, c in zip(h, s0, s1))

    def prove_rounds(kernel):
        for _ in range(rounds):
            kernel.prove_round(ns8, s0, s1, s2, *tapes)

    report(
        f"circuit prove_round x{rounds}",
        timeit(lambda: prove_rounds(zkboo_pure), repeat=1),
        timeit(lambda: prove_rounds(zkboo_compiled)) if zkboo_compiled else None,
    )

    comm, _ = (zkboo_compiled or zkboo_pure).prove_round(ns8, s0, s1, s2, *tapes)

    def verify_rounds(kernel):
        for _ in range(rounds):
            kernel.verify_round(ns8, 0, s0, s1, tapes[0], tapes[1], comm[1])

    report(
        f"circuit verify_round x{rounds}",
        timeit(lambda: verify_rounds(zkboo_pure), repeat=1),
        timeit(lambda: verify_rounds(zkboo_compiled)) if zkboo_compiled else None,
    )


def bench_full_proof() -> None:
    rng = random.Random(44)
    h = Commitment(rng.randbytes(32))
    ns = IssuerNamespace("OWNER001")
    statement = zkboo.PossessionStatement(
        ai_id=derive_ai_id(h, ns), namespace=ns,
        challenge_nonce=rng.randbytes(32), rounds=69,
    )
    witness = zkboo.PossessionWitness(h=h)
    proof = zkboo.prove(statement, witness)
    prove_time = timeit(lambda: zkboo.prove(statement, witness))
    verify_time = timeit(lambda: zkboo.verify(statement, proof))
    print(
        f"{'full proof, r=69 (' + zkboo.backend_name() + ' backend)':<38} "
        f"prove {prove_time * 1e3:8.2f} ms   verify {verify_time * 1e3:9.2f} ms"
    )


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--mb", type=int, default=2, help="stream size for the LZ benchmarks")
    parser.add_argument("--proof-rounds", type=int, default=8,
                        help="kernel invocations for the circuit benchmarks")
    args = parser.parse_args()

    print(f"active backends: lzjd={'compiled' if lzjd_compiled else 'pure'}, "
          f"zkboo={'compiled' if zkboo_compiled else 'pure'}\n")
    bench_lzjd(args.mb)
    bench_zkboo(args.proof_rounds)
    bench_full_proof()


if __name__ == "__main__":
    main()
