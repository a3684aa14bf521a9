//! Multiscale Hessian-eigenvalue vesselness (Frangi-style front end).
//!
//! At each scale sigma the image is convolved with scale-normalized
//! (multiplied by sigma^2) second Gaussian derivatives to build a Hessian
//! field; the eigenvalues of the per-pixel 2x2 Hessian feed the vesselness
//! response, and the per-pixel maximum over all scales is rescaled to
//! [0, 255] for thresholding.
//!
//! All floating-point work is generic over [`Scalar`] (`f32`/`f64`).

use crate::error::{Error, Result};
use crate::raster::GrayImage;
use crate::Scalar;

/// Magnitudes at or below this are treated as the "lambda2 = 0" case.
/// DC-corrected kernels still leave ~1e-14 of rounding noise on constant
/// images; without this guard the per-image max rescaling would amplify
/// that noise to full range. Genuine responses on 8-bit images are >= 1e-3.
const NUMERICAL_ZERO: f64 = 1e-12;

/// Ridge polarity the sign test selects for.
#[derive(Copy, Clone, PartialEq, Eq, Debug, Default)]
pub enum Polarity {
    /// Dark curvilinear structures on a bright background (lambda2 > 0);
    /// the vessel polarity of fundus photographs.
    #[default]
    DarkOnBright,
    /// Bright structures on a dark background (lambda2 < 0).
    BrightOnDark,
}

/// Parameters of the multiscale vesselness filter.
#[derive(Copy, Clone, PartialEq, Debug)]
pub struct FrangiParams<T> {
    /// Smallest scale in pixels.
    pub sigma_min: T,
    /// Largest scale in pixels.
    pub sigma_max: T,
    /// Scale increment in pixels.
    pub sigma_step: T,
    /// Blobness sensitivity (dimensionless).
    pub beta: T,
    /// Structureness sensitivity (intensity units).
    pub c: T,
    /// Ridge polarity.
    pub polarity: Polarity,
}

impl<T: Scalar> Default for FrangiParams<T> {
    /// Scales 1..8 step 1, beta = 0.5, c = 15, dark-on-bright: the
    /// reference defaults, spanning the vessel calibers of fundus images.
    fn default() -> Self {
        Self {
            sigma_min: T::one(),
            sigma_max: T::c(8.0),
            sigma_step: T::one(),
            beta: T::c(0.5),
            c: T::c(15.0),
            polarity: Polarity::DarkOnBright,
        }
    }
}

impl<T: Scalar> FrangiParams<T> {
    pub fn validate(&self) -> Result<()> {
        // Positive-form checks so NaN parameters fail validation too.
        let range_ok = self.sigma_min > T::zero() && self.sigma_min <= self.sigma_max;
        if !range_ok {
            return Err(Error::InvalidParams(format!(
                "scale range must satisfy 0 < sigma_min <= sigma_max, got {:?}..{:?}",
                self.sigma_min, self.sigma_max
            )));
        }
        let step_ok = self.sigma_step > T::zero();
        if !step_ok {
            return Err(Error::InvalidParams(format!(
                "sigma_step must be > 0, got {:?}",
                self.sigma_step
            )));
        }
        let weights_ok = self.beta > T::zero() && self.c > T::zero();
        if !weights_ok {
            return Err(Error::InvalidParams(format!(
                "beta and c must be > 0, got beta={:?} c={:?}",
                self.beta, self.c
            )));
        }
        Ok(())
    }

    /// The scale set {sigma_min, sigma_min+step, ...} up to sigma_max
    /// (inclusive, with a relative slack so 1..8 step 1 contains 8).
    pub fn scales(&self) -> Vec<T> {
        let slack = self.sigma_step * T::c(1e-9);
        let mut out = Vec::new();
        let mut k = 0usize;
        loop {
            let s = self.sigma_min + T::from_usize(k).expect("scale index") * self.sigma_step;
            if s > self.sigma_max + slack {
                break;
            }
            out.push(s);
            k += 1;
        }
        out
    }
}

/// Per-pixel symmetric 2x2 second-derivative responses at one scale.
/// Symmetric by construction: a single `dxy` plane is stored.
#[derive(Clone, PartialEq, Debug)]
pub struct HessianField<T> {
    width: u32,
    height: u32,
    pub dxx: Vec<T>,
    pub dxy: Vec<T>,
    pub dyy: Vec<T>,
}

impl<T: Scalar> HessianField<T> {
    /// Wraps precomputed planes; all three must have `width * height`
    /// entries.
    pub fn from_parts(width: u32, height: u32, dxx: Vec<T>, dxy: Vec<T>, dyy: Vec<T>) -> Result<Self> {
        let n = width as usize * height as usize;
        if width == 0 || height == 0 || dxx.len() != n || dxy.len() != n || dyy.len() != n {
            return Err(Error::InvalidRaster(format!(
                "hessian planes must each hold {width}x{height} entries"
            )));
        }
        Ok(Self { width, height, dxx, dxy, dyy })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }
}

/// Sampled 1D Gaussian and its first and second derivatives, truncated at
/// radius ceil(4*sigma). The smoother is renormalized to unit sum and the
/// derivative kernels to zero sum, so constant inputs are rejected to
/// rounding noise rather than to the ~1e-3/sigma^2 truncation residue of
/// the raw samples.
fn gaussian_kernel_family<T: Scalar>(sigma: T) -> (Vec<T>, Vec<T>, Vec<T>) {
    let radius = (sigma * T::c(4.0)).ceil().to_isize().expect("kernel radius").max(1);
    let n = (2 * radius + 1) as usize;
    let inv_s2 = T::one() / (sigma * sigma);
    let half = T::c(0.5);

    let mut g = Vec::with_capacity(n);
    for i in -radius..=radius {
        let x = T::from_isize(i).expect("kernel tap");
        g.push((-(x * x) * inv_s2 * half).exp());
    }
    let sum = g.iter().fold(T::zero(), |a, &b| a + b);
    for v in &mut g {
        *v = *v / sum;
    }

    let mut dg = Vec::with_capacity(n);
    let mut ddg = Vec::with_capacity(n);
    for (j, i) in (-radius..=radius).enumerate() {
        let x = T::from_isize(i).expect("kernel tap");
        dg.push(-x * inv_s2 * g[j]);
        ddg.push((x * x * inv_s2 - T::one()) * inv_s2 * g[j]);
    }
    zero_dc(&mut dg);
    zero_dc(&mut ddg);
    (g, dg, ddg)
}

fn zero_dc<T: Scalar>(k: &mut [T]) {
    let n = T::from_usize(k.len()).expect("kernel length");
    let mean = k.iter().fold(T::zero(), |a, &b| a + b) / n;
    for v in k {
        *v = *v - mean;
    }
}

/// Horizontal pass of a separable convolution with edge replication.
fn convolve_rows<T: Scalar>(src: &[T], width: usize, height: usize, kernel: &[T]) -> Vec<T> {
    let radius = (kernel.len() / 2) as isize;
    let mut out = vec![T::zero(); src.len()];
    for y in 0..height {
        let row = &src[y * width..(y + 1) * width];
        for x in 0..width {
            let mut acc = T::zero();
            for (j, &k) in kernel.iter().enumerate() {
                let xx = (x as isize + j as isize - radius).clamp(0, width as isize - 1);
                acc = acc + k * row[xx as usize];
            }
            out[y * width + x] = acc;
        }
    }
    out
}

/// Vertical pass of a separable convolution with edge replication.
fn convolve_cols<T: Scalar>(src: &[T], width: usize, height: usize, kernel: &[T]) -> Vec<T> {
    let radius = (kernel.len() / 2) as isize;
    let mut out = vec![T::zero(); src.len()];
    for y in 0..height {
        for x in 0..width {
            let mut acc = T::zero();
            for (j, &k) in kernel.iter().enumerate() {
                let yy = (y as isize + j as isize - radius).clamp(0, height as isize - 1);
                acc = acc + k * src[yy as usize * width + x];
            }
            out[y * width + x] = acc;
        }
    }
    out
}

/// Scale-normalized Hessian of the image at one scale: each plane is the
/// image convolved with separable Gaussian-derivative kernels (radius
/// ceil(4*sigma), edge replication) and multiplied by sigma^2.
pub fn hessian_at_scale<T: Scalar>(img: &GrayImage, sigma: T) -> Result<HessianField<T>> {
    let sigma_ok = sigma > T::zero();
    if !sigma_ok {
        return Err(Error::InvalidParams(format!("sigma must be > 0, got {sigma:?}")));
    }
    let (w, h) = (img.width() as usize, img.height() as usize);
    let src: Vec<T> = img.pixels().iter().map(|&v| T::from_u8(v).expect("u8 fits")).collect();
    let (g, dg, ddg) = gaussian_kernel_family(sigma);
    let s2 = sigma * sigma;

    let mut dxx = convolve_cols(&convolve_rows(&src, w, h, &ddg), w, h, &g);
    let mut dyy = convolve_cols(&convolve_rows(&src, w, h, &g), w, h, &ddg);
    let mut dxy = convolve_cols(&convolve_rows(&src, w, h, &dg), w, h, &dg);
    for plane in [&mut dxx, &mut dyy, &mut dxy] {
        for v in plane.iter_mut() {
            *v = *v * s2;
        }
    }
    HessianField::from_parts(img.width(), img.height(), dxx, dxy, dyy)
}

/// Eigenvalues of the symmetric matrix [[dxx, dxy], [dxy, dyy]] via the
/// trace/determinant closed form, ordered |lambda1| <= |lambda2|; equal
/// magnitudes are ordered lambda1 >= lambda2.
pub fn eigenvalues_sym2x2<T: Scalar>(dxx: T, dxy: T, dyy: T) -> (T, T) {
    let half = T::c(0.5);
    let mean = (dxx + dyy) * half;
    let delta = (dxx - dyy) * half;
    let radius = (delta * delta + dxy * dxy).sqrt();
    let hi = mean + radius;
    let lo = mean - radius;
    if lo.abs() < hi.abs() {
        (lo, hi)
    } else {
        (hi, lo)
    }
}

/// Vesselness of one eigenvalue pair. Zero when the sign test fails or
/// lambda2 is (numerically) zero; otherwise
/// `exp(-R_B^2 / 2 beta^2) * (1 - exp(-S^2 / 2 c^2))` with
/// `R_B = lambda1 / lambda2` and `S^2 = lambda1^2 + lambda2^2`.
fn eigen_response<T: Scalar>(l1: T, l2: T, beta: T, c: T, polarity: Polarity) -> T {
    if l2.abs() <= T::c(NUMERICAL_ZERO) {
        return T::zero();
    }
    let sign_ok = match polarity {
        Polarity::DarkOnBright => l2 > T::zero(),
        Polarity::BrightOnDark => l2 < T::zero(),
    };
    if !sign_ok {
        return T::zero();
    }
    let two = T::c(2.0);
    let rb = l1 / l2;
    let s2 = l1 * l1 + l2 * l2;
    let blobness = (-(rb * rb) / (two * beta * beta)).exp();
    let structureness = T::one() - (-s2 / (two * c * c)).exp();
    blobness * structureness
}

/// Per-pixel vesselness of a Hessian field; every value lies in [0, 1].
pub fn vesselness_at_scale<T: Scalar>(field: &HessianField<T>, beta: T, c: T, polarity: Polarity) -> Vec<T> {
    field
        .dxx
        .iter()
        .zip(&field.dxy)
        .zip(&field.dyy)
        .map(|((&dxx, &dxy), &dyy)| {
            let (l1, l2) = eigenvalues_sym2x2(dxx, dxy, dyy);
            eigen_response(l1, l2, beta, c, polarity)
        })
        .collect()
}

/// Pre-rescaling multiscale response: the per-pixel maximum of
/// [`vesselness_at_scale`] over the scale set of `params`.
pub fn frangi_response<T: Scalar>(img: &GrayImage, params: &FrangiParams<T>) -> Result<Vec<T>> {
    params.validate()?;
    let scales = params.scales();
    if scales.is_empty() {
        return Err(Error::InvalidParams("empty scale set".into()));
    }
    let mut best = vec![T::zero(); img.pixels().len()];
    for sigma in scales {
        let field = hessian_at_scale(img, sigma)?;
        let v = vesselness_at_scale(&field, params.beta, params.c, params.polarity);
        for (b, v) in best.iter_mut().zip(v) {
            *b = b.max(v);
        }
    }
    Ok(best)
}

/// Multiscale vesselness rescaled to 8 bits: the response maximum maps to
/// 255 (an all-zero response stays all-zero), quantized by rounding
/// half-up.
pub fn frangi_multiscale<T: Scalar>(img: &GrayImage, params: &FrangiParams<T>) -> Result<GrayImage> {
    let resp = frangi_response(img, params)?;
    Ok(quantize_response(&resp, img.width(), img.height()))
}

/// Rescales a nonnegative response so its maximum maps to 255 and rounds
/// half-up; all-zero input stays all-zero.
pub fn quantize_response<T: Scalar>(resp: &[T], width: u32, height: u32) -> GrayImage {
    let mx = resp.iter().fold(T::zero(), |a, &b| a.max(b));
    let full = T::c(255.0);
    let data: Vec<u8> = if mx > T::zero() {
        resp.iter()
            .map(|&v| (v / mx * full).round().to_u8().unwrap_or(255))
            .collect()
    } else {
        vec![0; resp.len()]
    };
    GrayImage::from_raw(width, height, data).expect("response has image dimensions")
}
