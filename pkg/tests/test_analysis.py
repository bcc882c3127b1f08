import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resforge.errors import ConfigError, FitError, NoResonanceError, SpectrumError
from resforge.analysis import (
    EnsembleStats,
    ResonanceFit,
    Spectrum,
    ensemble_stats,
    fit_lorentzian,
    format_table,
    lorentzian,
    noise_floor,
    parse_csv,
    process_plan,
    read_csv,
    scattering_loss_ratio,
    synthetic_ensemble,
    synthetic_spectrum,
    write_csv,
)


# ------------------------------------------------------------------ Lorentzian fit

def test_noiseless_fit_is_exact():
    sp = synthetic_spectrum(0.7103, 9070.0, seed=0, amplitude=3.0, baseline=0.2)
    fit = fit_lorentzian(sp)
    assert fit.wavelength == pytest.approx(0.7103, rel=1e-9)
    assert fit.q == pytest.approx(9070.0, rel=1e-6)
    assert fit.amplitude == pytest.approx(3.0, rel=1e-6)
    assert fit.baseline == pytest.approx(0.2, abs=1e-6)
    assert not fit.lower_bound


@pytest.mark.parametrize("seed", range(5))
def test_noisy_fit_recovers_q(seed):
    fit = fit_lorentzian(synthetic_spectrum(0.737, 33260.0, seed=seed, noise=0.05))
    assert fit.q == pytest.approx(33260.0, rel=0.02)


def test_dip_orientation():
    wl = np.linspace(0.699, 0.701, 801)
    sp = Spectrum(wl, lorentzian(wl, 0.7, 0.7 / 5000, -0.6, 1.0))
    fit = fit_lorentzian(sp, orientation="dip")
    assert fit.amplitude < 0
    assert fit.q == pytest.approx(5000.0, rel=1e-6)


def test_flat_spectrum_has_no_resonance():
    wl = np.linspace(0.7, 0.71, 200)
    with pytest.raises(NoResonanceError):
        fit_lorentzian(Spectrum(wl, np.ones_like(wl)))


def test_two_comparable_peaks_rejected():
    wl = np.linspace(0.70, 0.71, 2001)
    y = lorentzian(wl, 0.703, 1e-4, 1.0, 0.0) + lorentzian(wl, 0.707, 1e-4, 0.9, 0.0)
    with pytest.raises(FitError):
        fit_lorentzian(Spectrum(wl, y))


def test_fit_needs_samples_and_valid_orientation():
    sp = synthetic_spectrum(0.7, 1000.0, 0, n=201)
    with pytest.raises(FitError):
        fit_lorentzian(sp, window=(0.7, 0.70001))
    with pytest.raises(ValueError):
        fit_lorentzian(sp, orientation="side")


@settings(max_examples=25, deadline=None)
@given(st.floats(1e-3, 1e3), st.floats(-0.05, 0.05), st.floats(500, 50000))
def test_fit_equivariance(scale, shift, q):
    base = synthetic_spectrum(0.7, q, seed=1, amplitude=1.0, baseline=0.1)
    a = fit_lorentzian(base)
    b = fit_lorentzian(Spectrum(base.wavelengths + shift, base.intensity * scale))
    assert b.wavelength == pytest.approx(a.wavelength + shift, rel=1e-9)
    assert b.fwhm == pytest.approx(a.fwhm, rel=1e-6)
    assert b.amplitude == pytest.approx(a.amplitude * scale, rel=1e-6)


def test_under_resolved_line_is_lower_bound():
    # FWHM 0.1 nm sampled every 0.1 nm
    wl = np.arange(705.0, 715.0, 0.1) * 1e-3
    sp = Spectrum(wl, lorentzian(wl, 0.71025, 1e-4, 1.0, 0.01))
    fit = fit_lorentzian(sp)
    assert fit.lower_bound


def test_fit_dict_round_trip():
    fit = fit_lorentzian(synthetic_spectrum(0.7, 2000.0, 3, noise=0.01))
    back = ResonanceFit.from_dict(fit.to_dict())
    assert back == fit
    assert fit.to_dict()["wavelength_nm"] == pytest.approx(fit.wavelength * 1e3)


def test_noise_floor_estimate():
    rng = np.random.default_rng(7)
    y = np.linspace(0, 5, 20001) + 0.03 * rng.standard_normal(20001)
    assert noise_floor(y) == pytest.approx(0.03, rel=0.05)


# ------------------------------------------------------------------ ensemble statistics

def test_synthetic_ensemble_statistics():
    st_ = ensemble_stats(synthetic_ensemble(606.499, 0.623, 6040.0, 10, seed=11))
    assert st_.mean_wavelength_nm == pytest.approx(606.499, abs=0.4)
    assert st_.std_wavelength_nm > 0
    assert st_.q_lower_bound and st_.n_devices == 10 and not st_.single
    assert st_.mean_q == pytest.approx(6040.0)


@settings(max_examples=25)
@given(st.lists(st.floats(0.5, 1.0), min_size=1, max_size=20), st.randoms())
def test_ensemble_permutation_invariant(wls, rnd):
    fits = [ResonanceFit(w, w / 1000, 1000.0 + k, 1.0, 0.0, 0.0) for k, w in enumerate(wls)]
    shuffled = fits[:]
    rnd.shuffle(shuffled)
    assert ensemble_stats(fits) == ensemble_stats(shuffled)


def test_single_and_identical_fits():
    f = ResonanceFit(0.7, 1e-4, 7000.0, 1.0, 0.0, 0.0)
    one = ensemble_stats([f])
    assert one.std_wavelength_nm == 0.0 and one.n_devices == 1 and one.single
    assert ensemble_stats([f] * 5).std_wavelength_nm == 0.0
    with pytest.raises(ValueError):
        ensemble_stats([])


def test_table_format_marks_lower_bounds():
    rows = [ensemble_stats(synthetic_ensemble(606.5, 0.6, 6040, 10, 1)),
            ensemble_stats(synthetic_ensemble(737.0, 1.0, 4000, 4, 2, lower_bound=False))]
    text = format_table(rows, labels=["A", "B"])
    lines = text.splitlines()
    assert "6,040 a" in lines[2] and " a" not in lines[3]
    assert lines[-1].startswith("a)")
    assert EnsembleStats.from_dict(rows[0].to_dict()) == rows[0]


# ------------------------------------------------------------------ process and scattering

def test_process_plan_numbers():
    p = process_plan(250.0, 150.0, thin_from=500.0, thin_to=50.0)
    assert p.ald_cycles == 6667
    assert p.tio2_etch_time == pytest.approx((150 / 1.7, 100.0))
    assert p.pmma_descum_removal == 7.5
    assert p.membrane_etch_time == pytest.approx((450 / 1.4, 450 / 1.2))
    assert p.membrane_etch_time[0] == pytest.approx(321.4, abs=0.05)
    assert p.membrane_etch_time[1] == pytest.approx(375.0)


def test_process_plan_exact_multiple_and_errors():
    assert process_plan(240.0, 60.0).ald_cycles == 5000
    with pytest.raises(ValueError):
        process_plan(-1.0, 10.0)
    with pytest.raises(ValueError):
        process_plan(10.0, 10.0, thin_from=50.0, thin_to=100.0)


def test_scattering_ratio_value():
    assert scattering_loss_ratio(2.0, 0.606, 1.0, 0.737) == pytest.approx(4 * (0.737 / 0.606) ** 3)
    assert scattering_loss_ratio(1.0, 602.0, 1.0, 737.0) == pytest.approx(1.835, abs=1e-3)


@given(st.floats(0.1, 10), st.floats(0.3, 2), st.floats(0.1, 10), st.floats(0.3, 2), st.floats(0.1, 10))
def test_scattering_ratio_properties(s1, w1, s2, w2, k):
    r = scattering_loss_ratio(s1, w1, s2, w2)
    assert r * scattering_loss_ratio(s2, w2, s1, w1) == pytest.approx(1.0, rel=1e-12)
    assert scattering_loss_ratio(k * s1, w1, s2, w2) == pytest.approx(k * k * r, rel=1e-12)
    assert scattering_loss_ratio(s1, w1, s1, w1) == pytest.approx(1.0, rel=1e-15)


def test_scattering_ratio_rejects_nonpositive():
    with pytest.raises(ValueError):
        scattering_loss_ratio(0.0, 0.7, 1.0, 0.7)


# ------------------------------------------------------------------ spectrum CSV

def test_csv_round_trip(tmp_path):
    sp = synthetic_spectrum(0.737, 5000.0, 4, noise=0.02, n=101)
    path = tmp_path / "s.csv"
    write_csv(sp, path)
    back = read_csv(path)
    assert np.allclose(back.wavelengths, sp.wavelengths, rtol=1e-10, atol=0)
    assert np.allclose(back.intensity, sp.intensity, rtol=1e-11, atol=0)
    assert path.read_text().startswith("wavelength_nm,intensity\n")


def test_csv_comments_and_header():
    sp = parse_csv("# measured\nwl,I\n700,1\n\n701,2\n")
    assert list(sp.wavelengths * 1e3) == pytest.approx([700, 701])


@pytest.mark.parametrize("text, err", [("700,1\n699,2\n", SpectrumError), ("700,1\n700,2\n", SpectrumError),
                                       ("700,1\n701,x\n", ConfigError), ("700\n", ConfigError),
                                       ("700,-1\n701,1\n", SpectrumError)])
def test_csv_errors(text, err):
    with pytest.raises(err):
        parse_csv(text)


def test_csv_error_carries_location():
    with pytest.raises(ConfigError) as info:
        parse_csv("700,1\n701,oops\n", "data.csv")
    assert "data.csv" in str(info.value)


def test_short_spectrum_cannot_be_fitted():
    sp = parse_csv("\n".join(f"{700 + k},{1 + (k == 3)}" for k in range(7)))
    with pytest.raises(FitError):
        fit_lorentzian(sp)
