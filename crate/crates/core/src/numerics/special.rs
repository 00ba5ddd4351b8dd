//! Exponentially scaled modified Bessel functions of the first kind,
//! orders 0 and 1, via Chebyshev expansions on `[0, 8]` and `(8, inf)`.

#![allow(clippy::excessive_precision)]

const I0_A: [f64; 30] = [
    -4.415_341_646_479_339_5E-18,
    3.330_794_518_822_238_4E-17,
    -2.431_279_846_547_955E-16,
    1.715_391_285_555_133E-15,
    -1.168_533_287_799_345_1E-14,
    7.676_185_498_604_936E-14,
    -4.856_446_783_111_929E-13,
    2.955_052_663_129_64E-12,
    -1.726_826_291_441_556E-11,
    9.675_809_035_373_237E-11,
    -5.189_795_601_635_263E-10,
    2.659_823_724_682_386_6E-9,
    -1.300_025_009_986_248E-8,
    6.046_995_022_541_919E-8,
    -2.670_793_853_940_612E-7,
    1.117_387_539_120_103_7E-6,
    -4.416_738_358_458_750_5E-6,
    1.644_844_807_072_889_6E-5,
    -5.754_195_010_082_104E-5,
    1.885_028_850_958_416_5E-4,
    -5.763_755_745_385_824E-4,
    1.639_475_616_941_335_7E-3,
    -4.324_309_995_050_576E-3,
    1.054_646_039_459_499_8E-2,
    -2.373_741_480_589_947E-2,
    4.930_528_423_967_071E-2,
    -9.490_109_704_804_764E-2,
    1.716_209_015_222_087_7E-1,
    -3.046_826_723_431_984E-1,
    6.767_952_744_094_761E-1,
];

const I0_B: [f64; 25] = [
    -7.233_180_487_874_754E-18,
    -4.830_504_485_944_182E-18,
    4.465_621_420_296_76E-17,
    3.461_222_867_697_461E-17,
    -2.827_623_980_516_583_6E-16,
    -3.425_485_619_677_219E-16,
    1.772_560_133_056_526_3E-15,
    3.811_680_669_352_622_4E-15,
    -9.554_846_698_828_307E-15,
    -4.150_569_347_287_222E-14,
    1.540_086_217_521_41E-14,
    3.852_778_382_742_142_6E-13,
    7.180_124_451_383_666E-13,
    -1.794_178_531_506_806_2E-12,
    -1.321_581_184_044_771_3E-11,
    -3.149_916_527_963_241_6E-11,
    1.188_914_710_784_643_9E-11,
    4.940_602_388_224_97E-10,
    3.396_232_025_708_386_5E-9,
    2.266_668_990_498_178E-8,
    2.048_918_589_469_063_8E-7,
    2.891_370_520_834_756_7E-6,
    6.889_758_346_916_825E-5,
    3.369_116_478_255_694_3E-3,
    8.044_904_110_141_088E-1,
];

const I1_A: [f64; 29] = [
    2.777_914_112_761_046_4E-18,
    -2.111_421_214_358_166E-17,
    1.553_631_957_736_200_5E-16,
    -1.105_596_947_735_386_2E-15,
    7.600_684_294_735_408E-15,
    -5.042_185_504_727_912E-14,
    3.223_793_365_945_575E-13,
    -1.983_974_397_764_943_6E-12,
    1.173_618_629_889_090_1E-11,
    -6.663_489_723_502_027E-11,
    3.625_590_281_552_117E-10,
    -1.887_249_751_722_829_4E-9,
    9.381_537_386_495_773E-9,
    -4.445_059_128_796_328E-8,
    2.003_294_753_552_135_3E-7,
    -8.568_720_264_695_455E-7,
    3.470_251_308_137_678_5E-6,
    -1.327_316_365_603_943_6E-5,
    4.781_565_107_550_054E-5,
    -1.617_608_158_258_967_4E-4,
    5.122_859_561_685_758E-4,
    -1.513_572_450_631_253_2E-3,
    4.156_422_944_312_888E-3,
    -1.056_408_489_462_619_7E-2,
    2.472_644_903_062_651_6E-2,
    -5.294_598_120_809_499E-2,
    1.026_436_586_898_471E-1,
    -1.764_165_183_578_340_6E-1,
    2.525_871_864_436_336_5E-1,
];

const I1_B: [f64; 25] = [
    7.51729631084210481353E-18,
    4.41434832307170791151E-18,
    -4.65030536848935832153E-17,
    -3.20952592199342395980E-17,
    2.96262899764595013876E-16,
    3.30820231092092828324E-16,
    -1.88035477551078244854E-15,
    -3.81440307243700780478E-15,
    1.04202769841288027642E-14,
    4.27244001671195135429E-14,
    -2.10154184277266431302E-14,
    -4.08355111109219731823E-13,
    -7.19855177624590851209E-13,
    2.03562854414708950722E-12,
    1.41258074366137813316E-11,
    3.25260358301548823856E-11,
    -1.89749581235054123450E-11,
    -5.58974346219658380687E-10,
    -3.83538038596423702205E-9,
    -2.63146884688951950684E-8,
    -2.51223623787020892529E-7,
    -3.88256480887769039346E-6,
    -1.10588938762623716291E-4,
    -9.76109749136146840777E-3,
    7.78576235018280120474E-1,
];

fn chbevl(x: f64, coeffs: &[f64]) -> f64 {
    let mut b0 = coeffs[0];
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &c in &coeffs[1..] {
        b2 = b1;
        b1 = b0;
        b0 = x * b1 - b2 + c;
    }
    0.5 * (b0 - b2)
}

/// `exp(-|x|) * I0(x)`.
pub fn i0e(x: f64) -> f64 {
    let ax = libm::fabs(x);
    if ax <= 8.0 {
        chbevl(0.5 * ax - 2.0, &I0_A)
    } else {
        chbevl(32.0 / ax - 2.0, &I0_B) / libm::sqrt(ax)
    }
}

/// `exp(-|x|) * I1(x)`.
pub fn i1e(x: f64) -> f64 {
    let ax = libm::fabs(x);
    let r =
        if ax <= 8.0 { chbevl(0.5 * ax - 2.0, &I1_A) * ax } else { chbevl(32.0 / ax - 2.0, &I1_B) / libm::sqrt(ax) };
    if x < 0.0 {
        -r
    } else {
        r
    }
}

/// `ln I0(x)`, finite for every finite `x`.
pub fn ln_i0(x: f64) -> f64 {
    libm::fabs(x) + libm::log(i0e(x))
}

/// `I1(x) / I0(x)`, the mean resultant length of a von Mises law with
/// concentration `x`.
pub fn bessel_ratio(x: f64) -> f64 {
    i1e(x) / i0e(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Power series `sum (x/2)^(2k+n) / (k! (k+n)!)`, scaled by `exp(-x)`.
    fn series(n: u32, x: f64) -> f64 {
        let h = x / 2.0;
        let mut term = h.powi(n as i32);
        for k in 1..=n {
            term /= k as f64;
        }
        let mut sum = term;
        for k in 1..400u32 {
            term *= h * h / (k as f64 * (k + n) as f64);
            sum += term;
            if term < sum * 1e-18 {
                break;
            }
        }
        sum * (-x).exp()
    }

    #[test]
    fn matches_power_series() {
        for &x in &[0.0, 1e-3, 0.5, 1.0, 2.5, 7.9, 8.0, 8.1, 15.0, 30.0, 60.0] {
            let (a, b) = (i0e(x), series(0, x));
            assert!((a - b).abs() <= 1e-14 * b.max(1e-300), "i0e({x}): {a} vs {b}");
            let (a, b) = (i1e(x), series(1, x));
            assert!((a - b).abs() <= 1e-14 * b.max(1e-300) + 1e-300, "i1e({x}): {a} vs {b}");
        }
    }

    #[test]
    fn known_values() {
        // I0(1) = 1.2660658777520082, I1(1) = 0.5651591039924851
        assert!((i0e(1.0) * 1f64.exp() - 1.2660658777520082).abs() < 1e-15);
        assert!((i1e(1.0) * 1f64.exp() - 0.5651591039924851).abs() < 1e-15);
        assert_eq!(i0e(0.0), 1.0);
        assert_eq!(i1e(0.0), 0.0);
        assert_eq!(i1e(-2.0), -i1e(2.0));
    }

    #[test]
    fn ratio_limits() {
        assert!(bessel_ratio(1e-8) < 1e-8);
        assert!(1.0 - bessel_ratio(1e6) < 1e-6);
        let mut prev = 0.0;
        for k in 1..200 {
            let r = bessel_ratio(k as f64 * 0.25);
            assert!(r > prev);
            prev = r;
        }
    }
}
