import pytest

from cbsim.noise import NOISELESS
from cbsim.profiles import ProfileError, load_profile, paper_profile, parse_profile, shipped_profile


def test_paper_profile_values():
    p = paper_profile()
    assert p.heat_a == 19.9
    assert p.heat_b == 44.0
    assert p.nbar_a == 0.004
    assert p.nbar_b == 0.011
    assert 1 / p.deph_spin_echo == pytest.approx(7e-3)


def test_empty_and_noiseless_profiles():
    assert parse_profile("") == NOISELESS
    assert parse_profile("# only a comment\n\n") == NOISELESS
    assert shipped_profile("noiseless") == NOISELESS


def test_comments_and_whitespace():
    p = parse_profile("  heat_a = 3.5   # quanta/s\ncorrelated_modes=TRUE\n")
    assert p.heat_a == 3.5
    assert p.correlated_modes


@pytest.mark.parametrize(
    "text, message",
    [
        ("heat_a=fast", "malformed value 'fast' for heat_a"),
        ("heat_c=1", "unknown key 'heat_c'"),
        ("heat_a=1\nheat_a=2", ":2: duplicate key"),
        ("heat_a", "expected key=value"),
        ("=1", "missing key"),
        ("heat_a=-1", "non-negative"),
        ("correlated_modes=maybe", "true or false"),
    ],
)
def test_profile_errors(text, message):
    with pytest.raises(ProfileError, match=message):
        parse_profile(text, "test.profile")


def test_load_profile_names_path(tmp_path):
    path = tmp_path / "x.profile"
    path.write_text("heat_a = 2\n")
    assert load_profile(path).heat_a == 2
    with pytest.raises(ProfileError, match="missing.profile"):
        load_profile(tmp_path / "missing.profile")
    with pytest.raises(ProfileError):
        shipped_profile("nope")
