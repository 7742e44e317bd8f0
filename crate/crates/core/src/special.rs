//! Numerical kernels used by the closed forms: the exponential integral,
//! the Erlang-2 CDF and adaptive Gauss-Kronrod (G7/K15) quadrature.

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_606_512_090_082;

/// Above this the positive series loses to the asymptotic expansion.
const EI_SERIES_MAX: f64 = 40.0;

/// Exponential integral Ei(x), Cauchy principal value for x > 0 and
/// `-E1(-x)` for x < 0.
///
/// Returns [`Error::Domain`] at the logarithmic singularity x = 0 (and for
/// non-finite input), and [`Error::Overflow`] carrying `+inf` once Ei(x)
/// exceeds `f64::MAX` (x ≳ 716.3).
pub fn exp_integral_ei(x: f64) -> Result<f64> {
    check_ei_arg(x)?;
    let v = if x < -1.0 {
        -(x.exp() * e1_continued_fraction(-x))
    } else if x <= EI_SERIES_MAX {
        ei_series(x)
    } else {
        // e^x / x * sum, assembled in log space to reach x ~ 716.
        (x - x.ln()).exp() * ei_asymptotic_sum(x)
    };
    if v.is_infinite() {
        return Err(Error::Overflow { value: v });
    }
    Ok(v)
}

/// e^{-x} Ei(x). Finite wherever Ei(x) is defined; the outage closed form
/// works with this scaled value so that huge and tiny exponentials cancel
/// analytically instead of numerically.
pub fn exp_integral_ei_scaled(x: f64) -> Result<f64> {
    check_ei_arg(x)?;
    Ok(if x < -1.0 {
        -e1_continued_fraction(-x)
    } else if x <= EI_SERIES_MAX {
        ei_series(x) * (-x).exp()
    } else {
        ei_asymptotic_sum(x) / x
    })
}

fn check_ei_arg(x: f64) -> Result<()> {
    if x == 0.0 {
        return Err(Error::Domain("Ei is singular at x = 0".into()));
    }
    if !x.is_finite() {
        return Err(Error::Domain(format!("Ei argument {x} is not finite")));
    }
    Ok(())
}

// gamma + ln|x| + sum_{k>=1} x^k / (k k!)
fn ei_series(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..500 {
        let kf = k as f64;
        term *= x / kf;
        let inc = term / kf;
        sum += inc;
        if inc.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    EULER_GAMMA + x.abs().ln() + sum
}

// sum_{k>=0} k! / x^k, truncated at the smallest term.
fn ei_asymptotic_sum(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        let next = term * k as f64 / x;
        if next >= term || next < 1e-18 * sum {
            break;
        }
        term = next;
        sum += term;
    }
    sum
}

/// e^{z} E1(z) for z > 1 by the modified Lentz evaluation of the
/// continued fraction.
fn e1_continued_fraction(z: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = z + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// CDF of the sum of two i.i.d. exponentials with mean `theta`:
/// `1 - e^{-x/θ}(1 + x/θ)` for x > 0.
pub fn erlang2_cdf(x: f64, theta: f64) -> Result<f64> {
    if !(theta > 0.0) {
        return Err(Error::Domain(format!(
            "Erlang scale must be positive, got {theta}"
        )));
    }
    if x.is_nan() {
        return Err(Error::Domain("Erlang CDF of NaN".into()));
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    let t = x / theta;
    if t.is_infinite() {
        return Ok(1.0);
    }
    Ok(-(-t).exp_m1() - t * (-t).exp())
}

/// Value, absolute error estimate and number of panels of an adaptive
/// quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub subdivisions: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_subdivisions: 200,
        }
    }
}

// Kronrod abscissae on [0, 1]; odd indices are the Gauss 7-point nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526,
    0.949_107_912_342_758_524_526_189_684_048,
    0.864_864_423_359_769_072_789_712_788_641,
    0.741_531_185_599_394_439_863_864_773_281,
    0.586_087_235_467_691_130_294_144_845_693,
    0.405_845_151_377_397_166_906_606_412_077,
    0.207_784_955_007_898_467_600_689_403_773,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_059,
    0.063_092_092_629_978_553_290_700_663_189,
    0.104_790_010_322_250_183_839_876_322_542,
    0.140_653_259_715_525_918_745_189_590_510,
    0.169_004_726_639_267_902_826_583_426_599,
    0.190_350_578_064_785_409_913_256_402_421,
    0.204_432_940_075_298_892_414_161_999_235,
    0.209_482_141_084_727_828_012_999_174_892,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679,
    0.279_705_391_489_276_667_901_467_771_424,
    0.381_830_050_505_118_944_950_369_775_489,
    0.417_959_183_673_469_387_755_102_040_816,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Panel {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Adaptive G7-K15 quadrature of `f` over `[a, b]`.
///
/// Bisects the panel with the largest error estimate until the summed
/// estimate is at most `max(abs_tol, rel_tol * |value|)`. The subdivision
/// cap defaults to 200; exceeding it yields
/// [`Error::QuadratureNonConvergence`] carrying the best estimate.
pub fn quad_gk<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<QuadratureResult> {
    quad_gk_points(
        f,
        &[a, b],
        QuadOptions {
            abs_tol,
            rel_tol,
            ..QuadOptions::default()
        },
    )
}

/// Like [`quad_gk`] but starts from the panels delimited by `points`
/// (sorted, first and last are the limits). Interior points are where the
/// integrand has kinks.
pub fn quad_gk_points<F: Fn(f64) -> f64>(
    f: F,
    points: &[f64],
    opts: QuadOptions,
) -> Result<QuadratureResult> {
    if points.len() < 2 {
        return Err(Error::Domain("quadrature needs at least two limits".into()));
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(Error::Domain("quadrature limits must be finite".into()));
    }
    if points.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain(
            "quadrature limits must be nondecreasing".into(),
        ));
    }
    let mut panels: Vec<Panel> = points
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| gk15(&f, w[0], w[1]))
        .collect();
    if panels.is_empty() {
        return Ok(QuadratureResult {
            value: 0.0,
            error_estimate: 0.0,
            subdivisions: 1,
        });
    }
    loop {
        let value: f64 = panels.iter().map(|p| p.value).sum();
        let error: f64 = panels.iter().map(|p| p.error).sum();
        let result = QuadratureResult {
            value,
            error_estimate: error,
            subdivisions: panels.len(),
        };
        if error <= opts.abs_tol.max(opts.rel_tol * value.abs()) {
            return Ok(result);
        }
        if panels.len() >= opts.max_subdivisions {
            return Err(Error::QuadratureNonConvergence { best: result });
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("panels is non-empty");
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            // Panel can no longer be split in floating point.
            return Err(Error::QuadratureNonConvergence { best: result });
        }
        panels.push(gk15(&f, p.a, mid));
        panels.push(gk15(&f, mid, p.b));
    }
}
