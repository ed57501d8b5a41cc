"""Image quality metrics for scoring enhancement results.

Full-reference scores (mean absolute error, PSNR, SSIM) compare an output
against its ground truth; the no-reference underwater quality score (UIQM,
Panetta, Gao and Agaian, IEEE J. Oceanic Eng. 2016) rates a single image by
combining colorfulness, sharpness and contrast components.

All functions take float images in [0, 1]. PSNR uses peak 1.0 and reports
identical inputs as float("inf"). The UIQM components internally rescale
to the 0..255 range the published combination weights were fitted on.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from . import img_io
from .errors import AquaSynthError, DimensionMismatch, ImageTooSmall

logger = logging.getLogger(__name__)

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03

# UIQM combination weights and colorfulness constants from Panetta et al.
# (2016); the luminance weights are the Rec. 601 ones used there.
UIQM_COEFFS = (0.0282, 0.2953, 3.5753)
UICM_MEAN_COEFF = -0.0268
UICM_VAR_COEFF = 0.1586
LUMA_WEIGHTS = (0.299, 0.587, 0.114)
TRIM_FRACTION = 0.1
BLOCK_SIZE = 8


def _check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionMismatch(f"shape {a.shape} vs {b.shape}")


def l1_loss(out: np.ndarray, gt: np.ndarray) -> float:
    """Mean absolute difference over all pixels and channels."""
    out = np.asarray(out, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    _check_same_shape(out, gt)
    return float(np.mean(np.abs(out - gt)))


def psnr(out: np.ndarray, gt: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB for unit-interval images.

    Identical inputs have zero error and come back as float("inf").
    """
    out = np.asarray(out, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    _check_same_shape(out, gt)
    mse = float(np.mean((out - gt) ** 2))
    if mse == 0.0:
        return float("inf")
    return 10.0 * math.log10(1.0 / mse)


def _gaussian_kernel(size: int, sigma: float) -> np.ndarray:
    offsets = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    kernel = np.exp(-0.5 * (offsets / sigma) ** 2)
    return kernel / kernel.sum()


def _local_mean(plane: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    # Separable filtering; cropping by the radius leaves exactly the
    # valid region, where the boundary mode cannot matter.
    radius = kernel.size // 2
    out = ndimage.correlate1d(plane, kernel, axis=0, mode="constant")
    out = ndimage.correlate1d(out, kernel, axis=1, mode="constant")
    return out[radius:-radius, radius:-radius]


def ssim(out: np.ndarray, gt: np.ndarray) -> float:
    """Mean local structural similarity over the image.

    Gaussian-weighted 11x11 windows (sigma 1.5), stabilizers k1=0.01 and
    k2=0.03 at data range 1.0, population statistics, computed per channel
    on the valid interior and averaged.
    """
    out = np.asarray(out, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    _check_same_shape(out, gt)
    if out.ndim == 2:
        out = out[..., None]
        gt = gt[..., None]
    if out.ndim != 3:
        raise DimensionMismatch(f"expected 2-D or 3-D image, got shape {out.shape}")
    if min(out.shape[0], out.shape[1]) < SSIM_WINDOW:
        raise ImageTooSmall(
            f"need at least {SSIM_WINDOW}x{SSIM_WINDOW}, got "
            f"{out.shape[0]}x{out.shape[1]}"
        )

    kernel = _gaussian_kernel(SSIM_WINDOW, SSIM_SIGMA)
    c1 = SSIM_K1**2
    c2 = SSIM_K2**2
    channel_means = []
    for c in range(out.shape[2]):
        x = out[:, :, c]
        y = gt[:, :, c]
        mu_x = _local_mean(x, kernel)
        mu_y = _local_mean(y, kernel)
        var_x = _local_mean(x * x, kernel) - mu_x**2
        var_y = _local_mean(y * y, kernel) - mu_y**2
        cov = _local_mean(x * y, kernel) - mu_x * mu_y
        score = ((2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)) / (
            (mu_x**2 + mu_y**2 + c1) * (var_x + var_y + c2)
        )
        channel_means.append(np.mean(score))
    return float(np.mean(channel_means))


def _trimmed_mean(values: np.ndarray, fraction: float = TRIM_FRACTION) -> float:
    ordered = np.sort(values, axis=None)
    cut = int(math.floor(fraction * ordered.size))
    kept = ordered[cut : ordered.size - cut]
    return float(kept.mean())


def uicm(img: np.ndarray) -> float:
    """Colorfulness component: trimmed-mean chroma magnitude plus spread.

    Chroma is measured on the red-green and yellow-blue opponent planes;
    the mean uses 10 percent tail trimming, the variance is taken over all
    pixels about that trimmed mean.
    """
    img = _as_rgb255(img)
    red, green, blue = img[:, :, 0], img[:, :, 1], img[:, :, 2]
    rg = red - green
    yb = (red + green) / 2.0 - blue
    mu_rg = _trimmed_mean(rg)
    mu_yb = _trimmed_mean(yb)
    var_rg = float(np.mean((rg - mu_rg) ** 2))
    var_yb = float(np.mean((yb - mu_yb) ** 2))
    return UICM_MEAN_COEFF * math.hypot(mu_rg, mu_yb) + UICM_VAR_COEFF * math.sqrt(
        var_rg + var_yb
    )


def _block_reduce(plane: np.ndarray, size: int) -> tuple[np.ndarray, np.ndarray]:
    # Trailing rows/columns that do not fill a block are dropped.
    rows = plane.shape[0] // size
    cols = plane.shape[1] // size
    trimmed = plane[: rows * size, : cols * size]
    blocks = trimmed.reshape(rows, size, cols, size)
    return blocks.max(axis=(1, 3)), blocks.min(axis=(1, 3))


def _eme(plane: np.ndarray, size: int = BLOCK_SIZE) -> float:
    """Log contrast ratio averaged over blocks; zero-minimum blocks skip."""
    maxima, minima = _block_reduce(plane, size)
    valid = minima > 0.0
    total = float(np.sum(np.log(maxima[valid] / minima[valid])))
    return 2.0 / maxima.size * total


def uism(img: np.ndarray) -> float:
    """Sharpness component: edge-map contrast, luminance-weighted per channel.

    Each channel is masked by its Sobel gradient magnitude before the
    block contrast measure, so only edge regions contribute.
    """
    img = _as_rgb255(img)
    total = 0.0
    for c, weight in enumerate(LUMA_WEIGHTS):
        channel = img[:, :, c]
        gx = ndimage.sobel(channel, axis=0)
        gy = ndimage.sobel(channel, axis=1)
        edges = np.hypot(gx, gy) * channel
        total += weight * _eme(edges)
    return total


def uiconm(img: np.ndarray) -> float:
    """Contrast component: Michelson-contrast entropy over luminance blocks.

    Per block, w = (max - min)/(max + min) contributes w*log(w), with the
    0*log(0) and empty-denominator cases counted as zero.
    """
    img = _as_rgb255(img)
    luma = (
        LUMA_WEIGHTS[0] * img[:, :, 0]
        + LUMA_WEIGHTS[1] * img[:, :, 1]
        + LUMA_WEIGHTS[2] * img[:, :, 2]
    )
    maxima, minima = _block_reduce(luma, BLOCK_SIZE)
    top = maxima - minima
    bottom = maxima + minima
    valid = (bottom > 0.0) & (top > 0.0)
    w = top[valid] / bottom[valid]
    return float(np.sum(w * np.log(w))) / maxima.size


def _as_rgb255(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3:
        raise DimensionMismatch(f"expected (H, W, 3) image, got shape {img.shape}")
    if min(img.shape[0], img.shape[1]) < BLOCK_SIZE:
        raise ImageTooSmall(
            f"need at least {BLOCK_SIZE}x{BLOCK_SIZE}, got "
            f"{img.shape[0]}x{img.shape[1]}"
        )
    return img * 255.0


def uiqm(img: np.ndarray) -> float:
    """No-reference underwater quality score (higher reads as better)."""
    c1, c2, c3 = UIQM_COEFFS
    return c1 * uicm(img) + c2 * uism(img) + c3 * uiconm(img)


@dataclass(frozen=True)
class ImageScores:
    """Scores for one output/reference pair."""

    name: str
    l1: float
    psnr: float
    ssim: float
    uiqm: float | None = None


@dataclass(frozen=True)
class MetricReport:
    """Directory-level means plus the per-image breakdown."""

    count: int
    mean_l1: float
    mean_psnr: float
    mean_ssim: float
    mean_uiqm: float | None
    images: tuple[ImageScores, ...]

    def to_dict(self) -> dict:
        # Non-finite floats are not valid JSON scalars; the +inf sentinel
        # for identical images is emitted as the string "Infinity".
        def safe(x):
            if x is None or math.isfinite(x):
                return x
            if math.isnan(x):
                return "NaN"
            return "Infinity" if x > 0 else "-Infinity"

        return {
            "count": self.count,
            "mean_l1": safe(self.mean_l1),
            "mean_psnr": safe(self.mean_psnr),
            "mean_ssim": safe(self.mean_ssim),
            "mean_uiqm": safe(self.mean_uiqm),
            "images": [
                {
                    "name": s.name,
                    "l1": safe(s.l1),
                    "psnr": safe(s.psnr),
                    "ssim": safe(s.ssim),
                    "uiqm": safe(s.uiqm),
                }
                for s in self.images
            ],
        }


def score_pair(
    out: np.ndarray, gt: np.ndarray, name: str = "", no_ref: bool = False
) -> ImageScores:
    """All metrics for one image pair; UIQM (of the output) on request."""
    return ImageScores(
        name=name,
        l1=l1_loss(out, gt),
        psnr=psnr(out, gt),
        ssim=ssim(out, gt),
        uiqm=uiqm(out) if no_ref else None,
    )


@dataclass(frozen=True)
class ScoreFailure:
    name: str
    message: str


def evaluate_directories(
    pred_dir: str | Path,
    ref_dir: str | Path,
    no_ref: bool = False,
    workers: int = 1,
) -> tuple[MetricReport, list[ScoreFailure]]:
    """Score every PNG in pred_dir against the same-named file in ref_dir.

    Pairing is by file name, non-recursive. Per-image failures (missing
    reference, unreadable file, shape mismatch) are collected and the rest
    of the batch still scores; aggregation order is the sorted name order
    regardless of worker count.
    """
    pred_dir = Path(pred_dir)
    ref_dir = Path(ref_dir)
    names = sorted(p.name for p in pred_dir.glob("*.png"))

    def run(name: str) -> ImageScores | ScoreFailure:
        ref_path = ref_dir / name
        if not ref_path.is_file():
            return ScoreFailure(name, f"no reference file {ref_path}")
        try:
            out = img_io.read_rgb(pred_dir / name)
            gt = img_io.read_rgb(ref_path)
            return score_pair(out, gt, name=name, no_ref=no_ref)
        except (OSError, AquaSynthError) as exc:
            logger.warning("scoring %s failed: %s", name, exc)
            return ScoreFailure(name, str(exc))

    if workers <= 1:
        outcomes = [run(name) for name in names]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run, names))

    scores = [o for o in outcomes if isinstance(o, ImageScores)]
    failures = [o for o in outcomes if isinstance(o, ScoreFailure)]

    count = len(scores)
    if count:
        mean_l1 = float(np.mean([s.l1 for s in scores]))
        mean_psnr = float(np.mean([s.psnr for s in scores]))
        mean_ssim = float(np.mean([s.ssim for s in scores]))
        mean_uiqm = float(np.mean([s.uiqm for s in scores])) if no_ref else None
    else:
        mean_l1 = mean_psnr = mean_ssim = 0.0
        mean_uiqm = None
    report = MetricReport(
        count=count,
        mean_l1=mean_l1,
        mean_psnr=mean_psnr,
        mean_ssim=mean_ssim,
        mean_uiqm=mean_uiqm,
        images=tuple(scores),
    )
    return report, failures
