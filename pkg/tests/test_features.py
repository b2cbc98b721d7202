import math

import numpy as np
import pytest

from shotladder.errors import (
    BlockTooLarge,
    EmptyPool,
    InvalidBitrate,
    MissingBitrate,
    NeedTwoFrames,
    TooFewBlocks,
)
from shotladder.features import (
    LLF1_NAMES,
    LLF2_NAMES,
    VIFF_NAMES,
    DctTextureStats,
    GsmModel,
    VifConfig,
    YUVVideo,
    bitrate_dct_texture,
    chroma_intensity,
    colorfulness,
    cti,
    dct_texture,
    extract_llf,
    glcm_features,
    gsm_fit,
    llf2_from_llf1,
    pool,
    read_yuv,
    si,
    subband_information,
    temporal_coherence,
    ti,
    vif_features,
    wavelet_subbands,
    write_yuv,
)
from shotladder.features.lowlevel import (
    GLCM_LEVELS,
    GLCM_OFFSETS,
    glcm_frame,
    glcm_matrices,
    quantize,
    spectral_coherence,
)
from shotladder.features.vif import frame_information, haar_decompose, jacobi_eigh
from shotladder.features.yuv import lanczos_matrix, resize_stack


def noise_video(t=3, h=128, w=128, seed=0, sampling="420"):
    rng = np.random.default_rng(seed)
    y = rng.random((t, h, w))
    dy, dx = {"420": (2, 2), "422": (1, 2), "444": (1, 1)}[sampling]
    u = 0.5 + 0.2 * (rng.random((t, h // dy, w // dx)) - 0.5)
    v = 0.5 + 0.2 * (rng.random((t, h // dy, w // dx)) - 0.5)
    return YUVVideo(y, u, v)


def const_video(level=0.4, t=3, h=128, w=128):
    return YUVVideo.from_luma(np.full((t, h, w), level))


# --- pooling ---------------------------------------------------------------

def test_pool_examples():
    assert pool([2, 2, 2]).tolist() == [2, 0, 0, 0]
    assert pool([0, 1], ("mean", "std")).tolist() == [0.5, 0.5]
    with pytest.raises(EmptyPool):
        pool([], ("mean",))


def test_pool_moments_match_direct_formula():
    x = np.random.default_rng(1).exponential(size=500)
    m = x.mean()
    sd = math.sqrt(((x - m) ** 2).mean())
    skew = (((x - m) / sd) ** 3).mean()
    kurt = (((x - m) / sd) ** 4).mean() - 3
    assert np.allclose(pool(x), [m, sd, skew, kurt], rtol=1e-12)
    assert pool(x, ("kurtosis", "mean")).tolist() == pytest.approx([m, kurt])


def test_pool_constant_with_rounding_noise():
    assert pool(np.full(1000, 0.1) * 3)[2:].tolist() == [0, 0]


# --- GLCM ------------------------------------------------------------------

def brute_glcm(block_q, levels=GLCM_LEVELS):
    """Pair-by-pair co-occurrence counting, one normalized symmetric matrix per angle."""
    b = block_q.shape[0]
    acc = np.zeros((levels, levels))
    for dr, dc in GLCM_OFFSETS:
        m = np.zeros((levels, levels))
        for r in range(b):
            for c in range(b):
                r2, c2 = r + dr, c + dc
                if 0 <= r2 < b and 0 <= c2 < b:
                    m[block_q[r, c], block_q[r2, c2]] += 1
                    m[block_q[r2, c2], block_q[r, c]] += 1
        acc += m / m.sum()
    return acc / len(GLCM_OFFSETS)


def brute_props(p):
    n = p.shape[0]
    contrast = energy_sq = homog = 0.0
    for i in range(n):
        for j in range(n):
            contrast += p[i, j] * (i - j) ** 2
            energy_sq += p[i, j] ** 2
            homog += p[i, j] / (1 + (i - j) ** 2)
    return contrast, math.sqrt(energy_sq), homog


def test_glcm_constant_video():
    props = glcm_frame(np.full((128, 128), 0.3))
    assert np.all(props["contrast"] == 0)
    assert np.all(props["homogeneity"] == 1)
    assert np.allclose(props["energy"], 1)
    assert np.all(props["correlation"] == 1)
    feats = glcm_features(const_video())
    for k in range(4):
        block = feats[8 * k:8 * k + 8]
        assert np.all(block[1:4] == 0) and np.all(block[4:] == 0)
    assert feats[[0, 8, 16, 24]].tolist() == pytest.approx([1, 0, 1, 1])


def test_glcm_checkerboard_matches_pair_counter():
    rr, cc = np.indices((64, 64))
    board = np.where((rr + cc) % 2 == 0, 3 / 32 + 1e-3, 20 / 32 + 1e-3)
    q = quantize(board)
    p = glcm_matrices(q[None])[0]
    assert np.allclose(p, brute_glcm(q), atol=1e-15)
    props = glcm_frame(board)
    contrast, energy, homog = brute_props(brute_glcm(q))
    assert props["contrast"][0] == pytest.approx(contrast, abs=1e-12)
    assert props["energy"][0] == pytest.approx(energy, abs=1e-12)
    assert props["homogeneity"][0] == pytest.approx(homog, abs=1e-12)


def test_glcm_random_block_matches_pair_counter():
    q = quantize(np.random.default_rng(4).random((64, 64)))
    assert np.allclose(glcm_matrices(q[None])[0], brute_glcm(q), atol=1e-15)


def test_glcm_block_too_large():
    with pytest.raises(BlockTooLarge):
        glcm_features(YUVVideo.from_luma(np.zeros((1, 63, 63))))


def test_glcm_property_ranges():
    props = glcm_frame(np.random.default_rng(2).random((256, 256)) ** 3)
    assert np.all((props["energy"] > 0) & (props["energy"] <= 1))
    assert np.all((props["homogeneity"] > 0) & (props["homogeneity"] <= 1))
    assert np.all(props["contrast"] >= 0)
    assert np.all(np.abs(props["correlation"]) <= 1 + 1e-12)


def test_glcm_invariant_to_block_order():
    rng = np.random.default_rng(5)
    frame = rng.random((128, 192))
    tiles = frame.reshape(2, 64, 3, 64).transpose(0, 2, 1, 3).reshape(6, 64, 64)
    shuffled = tiles[rng.permutation(6)].reshape(2, 3, 64, 64).transpose(0, 2, 1, 3).reshape(128, 192)
    a = glcm_features(YUVVideo.from_luma(np.stack([frame, frame * 0.5])))
    b = glcm_features(YUVVideo.from_luma(np.stack([shuffled, shuffled * 0.5])))
    assert np.allclose(a, b, rtol=1e-12, atol=1e-14)


# --- temporal coherence ----------------------------------------------------

def test_coherence_identical_frames():
    frame = np.random.default_rng(0).random((64, 64))
    out = temporal_coherence(YUVVideo.from_luma(np.stack([frame] * 3)))
    assert out == pytest.approx([1, 0, 0, 0, 0, 0, 0, 0], abs=1e-9)


def test_coherence_disjoint_spectra():
    rr, cc = np.indices((64, 64))
    a = np.cos(2 * np.pi * 3 * cc / 64)
    b = np.cos(2 * np.pi * 11 * rr / 64)
    c = spectral_coherence(a, b)
    assert c.mean() == pytest.approx(0, abs=1e-6)
    out = temporal_coherence(YUVVideo.from_luma(np.stack([a, b])))
    assert out[0] == pytest.approx(0, abs=1e-6)


def test_coherence_bins_bounded():
    v = noise_video(t=4)
    c = spectral_coherence(v.y[0], v.y[1])
    assert c.min() >= 0 and c.max() <= 1


def test_coherence_needs_two_frames():
    with pytest.raises(NeedTwoFrames):
        temporal_coherence(YUVVideo.from_luma(np.zeros((1, 64, 64))))


# --- SI / TI / CTI ---------------------------------------------------------

def test_si_ti_cti_constant():
    v = const_video(0.7)
    assert si(v).tolist() == [0] * 8
    assert ti(v).tolist() == [0] * 8
    assert cti(v)[0] == pytest.approx(0.7)
    assert np.all(cti(v)[1:] == 0)


def test_si_ramp_is_eight_times_slope():
    s = 0.0025
    ramp = np.tile(np.arange(128) * s, (96, 1))
    out = si(YUVVideo.from_luma(np.stack([ramp, ramp])))
    assert out[0] == pytest.approx(8 * s, rel=1e-12)
    assert out[4] == pytest.approx(0, abs=1e-12)  # spatial std, all interior pixels equal


def test_ti_static_and_error():
    frame = np.random.default_rng(0).random((32, 32))
    assert ti(YUVVideo.from_luma(np.stack([frame, frame]))).tolist() == [0] * 8
    with pytest.raises(NeedTwoFrames):
        ti(YUVVideo.from_luma(frame))


def test_ti_matches_direct_pooling():
    v = noise_video(t=4, h=32, w=32)
    d = np.diff(v.y, axis=0)
    means = d.reshape(3, -1).mean(axis=1)
    assert ti(v)[0] == pytest.approx(means.mean())


# --- colour ----------------------------------------------------------------

def rgb_to_yuv444(r, g, b):
    y = 0.2126 * r + 0.7152 * g + 0.0722 * b
    u = (b - y) / 1.8556 + 0.5
    v = (r - y) / 1.5748 + 0.5
    return y, u, v


def direct_colorfulness(r, g, b):
    rg = r - g
    yb = 0.5 * (r + g) - b
    return math.sqrt(rg.std() ** 2 + yb.std() ** 2) + 0.3 * math.sqrt(rg.mean() ** 2 + yb.mean() ** 2)


def test_colorfulness_gray():
    assert colorfulness(const_video(0.5)).tolist() == pytest.approx([0, 0, 0, 0], abs=1e-12)


def test_colorfulness_half_red_half_green():
    r = np.zeros((32, 32)); g = np.zeros((32, 32)); b = np.zeros((32, 32))
    r[:, :16] = 1.0
    g[:, 16:] = 1.0
    y, u, v = rgb_to_yuv444(r, g, b)
    out = colorfulness(YUVVideo(y[None], u[None], v[None]))
    assert out[0] == pytest.approx(direct_colorfulness(r, g, b), rel=1e-4)
    assert out[1:].tolist() == [0, 0, 0]


def test_colorfulness_nonnegative():
    assert colorfulness(noise_video(t=5))[0] >= 0


# --- chroma intensity ------------------------------------------------------

def test_chroma_neutral():
    out = chroma_intensity(const_video())
    assert out[0] == pytest.approx(0.5)
    assert out[8] == pytest.approx(2.5)


def test_chroma_v_doubling():
    v = noise_video(t=5)
    doubled = YUVVideo(v.y, v.u, 2 * v.v)
    a, b = chroma_intensity(v), chroma_intensity(doubled)
    assert np.array_equal(a[:8], b[:8])
    # mean/std of the temporal pooling are linear; skew/kurtosis are scale free
    for off in (8, 12):
        assert b[off:off + 2] == pytest.approx(2 * a[off:off + 2], rel=1e-12)
        assert b[off + 2:off + 4] == pytest.approx(a[off + 2:off + 4], rel=1e-9, abs=1e-12)


def test_chroma_matches_straight_line_oracle():
    v = noise_video(t=6, seed=9)
    expected = []
    for plane, w in ((v.u, 1.0), (v.v, 5.0)):
        means = np.array([w * f.mean() for f in plane])
        stds = np.array([w * f.std() for f in plane])
        for series in (means, stds):
            m = series.mean(); sd = series.std()
            z = (series - m) / sd
            expected += [m, sd, (z ** 3).mean(), (z ** 4).mean() - 3]
    assert np.allclose(chroma_intensity(v), expected, rtol=1e-9)


# --- DCT texture -----------------------------------------------------------

def cosine_matrix(n):
    k = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    c = np.cos(np.pi * (2 * i + 1) * k / (2 * n)) * math.sqrt(2 / n)
    c[0] /= math.sqrt(2)
    return c


def test_dct_constant_video():
    c = 0.25
    s = dct_texture(YUVVideo.from_luma(np.full((3, 64, 64), c), chroma_value=c))
    assert s.e_y == pytest.approx(0, abs=1e-12) and s.h_y == 0
    assert s.l_y == pytest.approx(math.sqrt(32 * c))


def test_dct_static_video():
    frame = noise_video(t=1)
    v = YUVVideo(np.repeat(frame.y, 3, 0), np.repeat(frame.u, 3, 0), np.repeat(frame.v, 3, 0))
    s = dct_texture(v)
    assert (s.h_y, s.h_u, s.h_v) == (0, 0, 0)


def test_dct_energy_matches_explicit_cosine_transform():
    v = noise_video(t=2, h=64, w=96, seed=11)
    cm = cosine_matrix(32)
    energies, lum = [], []
    for f in v.y:
        per_block, dc = [], []
        for r in range(0, 64, 32):
            for c in range(0, 96, 32):
                coeff = cm @ f[r:r + 32, c:c + 32] @ cm.T
                per_block.append((np.abs(coeff).sum() - abs(coeff[0, 0])) / (32 * 32 - 1))
                dc.append(math.sqrt(abs(coeff[0, 0])))
        energies.append(np.mean(per_block))
        lum.append(np.mean(dc))
    s = dct_texture(v)
    assert s.e_y == pytest.approx(np.mean(energies), abs=1e-9)
    assert s.l_y == pytest.approx(np.mean(lum), abs=1e-9)


def test_dct_block_too_large():
    with pytest.raises(BlockTooLarge):
        dct_texture(YUVVideo.from_luma(np.zeros((2, 31, 64))))


# --- bitrate DCT texture ---------------------------------------------------

def _stats(e, h):
    return DctTextureStats(e, h, 1, e, h, 1, e, h, 1)


def test_bitrate_texture_examples():
    assert bitrate_dct_texture(_stats(0.3, 0.3), 1).tolist() == pytest.approx([0, 0, 0], abs=1e-12)
    assert bitrate_dct_texture(_stats(0.1, 0.4), 2).tolist() == pytest.approx([3, 3, 3], abs=1e-12)
    assert bitrate_dct_texture(_stats(0.1, 0.0), 500).tolist() == [-1e9] * 3
    with pytest.raises(InvalidBitrate):
        bitrate_dct_texture(_stats(1, 1), 0)


def test_bitrate_texture_log_law():
    s = _stats(0.37, 0.05)
    for b in (1.0, 123.4, 9000.0):
        d = bitrate_dct_texture(s, 2 * b) - bitrate_dct_texture(s, b)
        assert d.tolist() == pytest.approx([2, 2, 2], abs=1e-12)


# --- assembly --------------------------------------------------------------

def test_llf_lengths_and_prefix():
    v = noise_video(t=3)
    llf1 = extract_llf(v, "LLF1", size=None)
    llf2 = extract_llf(v, "LLF2", bitrate=1000, size=None)
    assert len(llf1) == 93 and len(llf2) == 96
    assert llf1.names == LLF1_NAMES and llf2.names == LLF2_NAMES
    assert len(set(LLF2_NAMES)) == 96
    assert np.array_equal(llf2.values[:93], llf1.values)
    assert np.array_equal(llf2_from_llf1(llf1, 1000), llf2.values)
    with pytest.raises(MissingBitrate):
        extract_llf(v, "LLF2", size=None)


def test_llf_constant_video_invariants():
    vals = extract_llf(const_video(0.6, h=96, w=128), size=None).as_dict()
    assert all(vals[n] == 0 for n in vals if n.startswith(("si_", "ti_")))
    assert vals["dct_h_y"] == 0 and vals["dct_h_u"] == 0 and vals["dct_h_v"] == 0
    assert vals["glcm_contrast_mean_mean"] == 0
    assert vals["glcm_energy_mean_mean"] == pytest.approx(1)


def test_llf_bit_identical_across_workers():
    v = noise_video(t=4)
    a = extract_llf(v, "LLF1", size=None, workers=1).values
    b = extract_llf(v, "LLF1", size=None, workers=4).values
    assert a.tobytes() == b.tobytes()


def test_llf_default_resizes_to_uhd():
    v = noise_video(t=2, h=54, w=96)
    assert v.resized().y.shape == (2, 2160, 3840)
    assert v.resized().u.shape == (2, 1080, 1920)


# --- VIF -------------------------------------------------------------------

def test_haar_constant_frame():
    pyr = wavelet_subbands(np.full((64, 64), 0.8))
    assert all(np.all(band == 0) for _, _, band in pyr)


def test_haar_vertical_edge_lands_in_hl():
    frame = np.zeros((64, 64))
    frame[:, 33:] = 1.0
    lh, hl = wavelet_subbands(frame).bands[0]
    assert (hl ** 2).sum() > 100 * max((lh ** 2).sum(), 1e-12)


def test_haar_parseval():
    frame = np.random.default_rng(0).standard_normal((128, 96))
    details, ll = haar_decompose(frame)
    total = sum((b ** 2).sum() for lvl in details for b in lvl) + (ll ** 2).sum()
    assert total == pytest.approx((frame ** 2).sum(), rel=1e-12, abs=1e-6)


def test_gsm_zero_subband():
    m = gsm_fit(np.zeros((30, 30)))
    assert np.all(m.cov == 0) and np.all(m.eigvals == 0) and np.all(m.s_sq == 0)


def test_gsm_monte_carlo_eigenvalues():
    rng = np.random.default_rng(42)
    q, _ = np.linalg.qr(rng.standard_normal((9, 9)))
    true = np.array([9.0, 6.0, 4.0, 3.0, 2.0, 1.5, 1.0, 0.7, 0.5])
    cov = q @ np.diag(true) @ q.T
    vecs = rng.multivariate_normal(np.zeros(9), cov, size=10_000)
    band = vecs.reshape(100, 100, 3, 3).transpose(0, 2, 1, 3).reshape(300, 300)
    m = gsm_fit(band)
    assert m.block_count == 10_000
    assert np.all(np.abs(m.eigvals - true) / true < 0.10)
    for j in range(9):
        assert np.linalg.norm(m.cov @ m.eigvecs[:, j] - m.eigvals[j] * m.eigvecs[:, j]) < 1e-8


def test_jacobi_matches_reference_solver():
    a = np.random.default_rng(3).standard_normal((9, 9))
    a = a @ a.T
    w, v = jacobi_eigh(a)
    assert np.allclose(w, np.linalg.eigvalsh(a)[::-1], atol=1e-9)
    assert np.allclose(v.T @ v, np.eye(9), atol=1e-10)


def test_gsm_too_few_blocks():
    with pytest.raises(TooFewBlocks):
        gsm_fit(np.ones((8, 8)))


def test_information_spot_values():
    cfg = VifConfig(sigma_n_sq=2.0)
    model = GsmModel(np.eye(9) * 2, np.full(9, 2.0), np.eye(9), np.array([1.0]))
    assert subband_information(model, cfg).tolist() == pytest.approx([1.0] * 9)
    zero = GsmModel(np.eye(9), np.ones(9), np.eye(9), np.zeros(5))
    assert np.all(subband_information(zero, cfg) == 0)


def test_information_ratio_invariance():
    rng = np.random.default_rng(0)
    lam = np.sort(rng.random(9))[::-1]
    s = rng.random(50)
    base = subband_information(GsmModel(np.diag(lam), lam, np.eye(9), s), VifConfig(2.0))
    scaled = subband_information(GsmModel(np.diag(lam * 7), lam * 7, np.eye(9), s), VifConfig(14.0))
    assert np.allclose(base, scaled, rtol=1e-12)


def test_information_non_increasing_on_random_subbands():
    rng = np.random.default_rng(7)
    for _ in range(100):
        band = rng.standard_normal((45, 45)) * rng.gamma(1.0, 1.0, size=(45, 45)) * rng.uniform(0.1, 50)
        info = subband_information(gsm_fit(band))
        assert np.all(info >= 0)
        assert np.all(np.diff(info) <= 1e-12)


def test_information_monotone_under_subband_gain():
    band = np.random.default_rng(1).standard_normal((60, 60))
    base = subband_information(gsm_fit(band))
    louder = subband_information(gsm_fit(band * 3))
    assert np.all(louder >= base - 1e-12)


def test_vif_lengths_static_and_constant():
    rng = np.random.default_rng(0)
    frame = rng.random((192, 192))
    static = vif_features(YUVVideo.from_luma(np.stack([frame] * 3)), size=None)
    assert len(static) == 145 and static.names == VIFF_NAMES
    assert np.all(static.values[72:] == 0)
    assert np.all(static.values[:72] > 0)
    const = vif_features(YUVVideo.from_luma(np.full((2, 192, 192), 0.3)), size=None)
    assert np.all(const.values == 0)


def test_vif_dc_offset_invariance_and_workers():
    frames = np.random.default_rng(2).random((3, 192, 192)) * 0.5
    a = vif_features(YUVVideo.from_luma(frames), size=None)
    b = vif_features(YUVVideo.from_luma(frames + 0.25), size=None, workers=3)
    assert np.allclose(a.values[:72], b.values[:72], rtol=1e-9, atol=1e-12)
    c = vif_features(YUVVideo.from_luma(frames), size=None, workers=3)
    assert a.values.tobytes() == c.values.tobytes()
    assert np.all(a.values >= 0)


def test_vif_needs_two_frames():
    with pytest.raises(NeedTwoFrames):
        vif_features(YUVVideo.from_luma(np.zeros((1, 192, 192))), size=None)


def test_frame_information_order():
    frame = np.random.default_rng(0).random((192, 192))
    info = frame_information(frame)
    assert info.shape == (72,)
    assert VIFF_NAMES[0] == "vif_F_s1_LH_j1" and VIFF_NAMES[9] == "vif_F_s1_HL_j1"
    assert VIFF_NAMES[-1] == "vif_absdiff"


# --- YUV IO and resampling -------------------------------------------------

@pytest.mark.parametrize("pix_fmt,bits", [("yuv420p", 8), ("yuv422p", 8), ("yuv420p10le", 10)])
def test_yuv_round_trip(tmp_path, pix_fmt, bits):
    sampling = "422" if "422" in pix_fmt else "420"
    v = noise_video(t=2, h=48, w=64, sampling=sampling)
    path = tmp_path / "clip.yuv"
    write_yuv(path, v, bit_depth=bits)
    back = read_yuv(path, 64, 48, pix_fmt, bits)
    assert back.chroma == sampling
    assert np.abs(back.y - v.y).max() <= 0.5 / (2 ** bits - 1) + 1e-12
    assert read_yuv(path, 64, 48, pix_fmt, bits, frame_limit=1).n_frames == 1


def test_lanczos_rows_normalized_and_constant_preserved():
    m = lanczos_matrix(54, 2160)
    assert np.allclose(np.asarray(m.sum(axis=1)).ravel(), 1)
    out = resize_stack(np.full((1, 54, 96), 0.42), 3840, 2160)
    assert np.allclose(out, 0.42)
