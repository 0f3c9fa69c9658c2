"""Shared helpers for the test suite."""

from __future__ import annotations

import pytest

from bmatch.gen import GenConfig, generate_instance


def small_instances(count: int, seed: int, n_max: int = 4, m_max: int = 4,
                    b_high: int = 2, ps=(0.3, 0.6, 1.0)):
    """A deterministic stream of small markets cycling over shapes."""
    out = []
    for i in range(count):
        n = (i % n_max) + 1
        m = ((i // n_max) % m_max) + 1
        p = ps[i % len(ps)]
        cfg = GenConfig(n=n, m=m, p=p, capacity_low=1, capacity_high=b_high,
                        seed=seed)
        out.append(generate_instance(cfg, i))
    return out


@pytest.fixture(scope="session")
def small_batch():
    return small_instances(120, seed=1234)
