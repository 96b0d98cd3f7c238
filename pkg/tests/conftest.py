import os
import sys
from pathlib import Path

import pytest

# Add the project root directory to Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

# Keep the suite on one process unless a test asks for Ray explicitly
os.environ.setdefault("UVM_WORKERS", "1")

from uvm_pricer.models import (  # noqa: E402
    AlgoParams,
    ModelSpec,
    PayoffKind,
    PayoffSpec,
)


@pytest.fixture
def reference_model():
    """Builder for the reference market.

    S0=100, σ∈[0.1,0.2], ρ∈[−0.5,0.5], r=η=0, T=1.
    """

    def build(d: int, **overrides) -> ModelSpec:
        return ModelSpec.uniform(d, **overrides)

    return build


@pytest.fixture
def call_payoff():
    return PayoffSpec(kind=PayoffKind.CALL, K=100.0)


@pytest.fixture
def outperformer():
    return PayoffSpec(kind=PayoffKind.OUTPERFORMER)


@pytest.fixture
def small_algo():
    """Coarse settings that keep engine tests to a few seconds."""

    def build(N: int = 4, P: int = 32, **overrides) -> AlgoParams:
        return AlgoParams(N=N, P=P, **overrides)

    return build
