#!/usr/bin/env python3
"""Quantum-jump ensemble error versus ensemble size.

Runs the embedded emitter + damped-ancilla model with growing trajectory
counts and reports the max deviation of the ensemble-mean excited population
from the deterministic master-equation curve (expected to shrink like
1/sqrt(n)).
"""

import argparse

import numpy as np

from pseudomode import (
    DensityMatrix,
    EmbeddingSpec,
    IntegratorConfig,
    Lorentzian,
    Operator,
    TimeGrid,
    TrajectoryConfig,
    build_embedding,
    ensemble_average,
    evolve,
    expectation,
    identity,
    kron,
    tls_system,
)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=2024)
    parser.add_argument("--gamma", type=float, default=0.2)
    parser.add_argument("--sizes", type=int, nargs="+", default=[100, 400, 1600, 6400])
    args = parser.parse_args()

    bath = Lorentzian(g=1.0, omega0=0.0, gamma=args.gamma)
    emb = build_embedding(EmbeddingSpec(tls_system(), bath, 2), DensityMatrix.fock(2, 1))
    psi0 = np.zeros(emb.model.dim, dtype=complex)
    psi0[2] = 1.0  # |excited, vacuum>
    obs = kron(Operator(np.diag([0.0, 1.0]).astype(complex)), identity(2))
    grid = TimeGrid(0.0, 10.0, 101)

    det = evolve(emb.model, emb.rho0, grid, IntegratorConfig())
    ref = np.array([expectation(obs, st).real for st in det])

    loose = IntegratorConfig(rel_tol=1e-6, abs_tol=1e-9)
    print(f"{'n_traj':>8} {'max |mean - exact|':>20} {'max stderr':>12}")
    for n in args.sizes:
        cfg = TrajectoryConfig(n_traj=n, seed=args.seed, grid=grid, integrator=loose)
        stats = ensemble_average(emb.model, psi0, cfg, observables=(obs,))
        dev = np.max(np.abs(stats.means[0].real - ref))
        print(f"{n:8d} {dev:20.3e} {np.max(stats.stderrs[0]):12.3e}")


if __name__ == "__main__":
    main()
