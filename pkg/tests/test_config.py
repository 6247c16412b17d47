import pytest
from hypothesis import given, strategies as st

from ksqueue.config import RunConfig, parse_config, serialize_config
from ksqueue.errors import ParameterError
from ksqueue.mc import SamplerBackend


def test_defaults_are_table_values():
    c = RunConfig()
    assert (c.lam, c.mu, c.t_max, c.n_times, c.replications) == (0.8, 1.0, 20.0, 250, 3000)
    assert (c.t_star, c.n_max, c.m_z, c.seed) == (8.0, 35, 250, 20260117)


def test_parse_with_comments():
    text = """
    # a run
    alpha = 0.8   # fractional order
    gamma=0.2
    sampler_backend = BetaProduct
    out_dir = runs/a b
    """
    c = parse_config(text)
    assert c.alpha == 0.8 and c.gamma == 0.2 and c.out_dir == "runs/a b"
    assert c.sim_config().backend is SamplerBackend.BetaProduct


@pytest.mark.parametrize("text", ["speed = 3", "alpha 0.5", "n_max = many", "sampler_backend = Magic"])
def test_bad_documents_rejected(text):
    with pytest.raises(ParameterError):
        parse_config(text)


configs = st.builds(
    RunConfig,
    lam=st.floats(0.01, 10, allow_nan=False),
    mu=st.floats(0.01, 10, allow_nan=False),
    alpha=st.floats(0.05, 1.0),
    gamma=st.floats(0.0, 0.5),
    t_max=st.floats(1.0, 100.0),
    n_times=st.integers(2, 1000),
    replications=st.integers(1, 10**6),
    t_star=st.floats(0.5, 50.0),
    n_max=st.integers(1, 500),
    m_z=st.integers(1, 5000),
    seed=st.integers(0, 2**63),
    sampler_backend=st.sampled_from(["auto", "InverseCDF", "BetaProduct", "StableInverse", "DegenerateOne"]),
    out_dir=st.text(alphabet="abcdefgh/_-.", min_size=1, max_size=20),
)


@given(configs)
def test_round_trip_is_identity(cfg):
    once = parse_config(serialize_config(cfg))
    assert once == cfg
    assert serialize_config(once) == serialize_config(cfg)


def test_serialization_keeps_full_precision():
    cfg = RunConfig(alpha=0.1 + 0.2)
    assert "alpha = 0.30000000000000004" in serialize_config(cfg)
