#include "neurodenoise/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace neurodenoise {

namespace {

void check_same_shape(const ComplexSpectrogram& a, const ComplexSpectrogram& b, const char* what) {
    if (a.num_frames != b.num_frames || a.num_bins != b.num_bins)
        throw std::invalid_argument(std::string(what) + ": spectrogram shape mismatch");
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

double loss_tf(const ComplexSpectrogram& clean, const ComplexSpectrogram& est, double alpha) {
    check_same_shape(clean, est, "loss_tf");
    const double count = static_cast<double>(clean.data.size());
    if (count == 0.0) return 0.0;
    double mag_sq = 0.0;
    double re_sq = 0.0;
    double im_sq = 0.0;
    for (std::size_t i = 0; i < clean.data.size(); ++i) {
        double dm = std::abs(clean.data[i]) - std::abs(est.data[i]);
        double dr = clean.data[i].real() - est.data[i].real();
        double di = clean.data[i].imag() - est.data[i].imag();
        mag_sq += dm * dm;
        re_sq += dr * dr;
        im_sq += di * di;
    }
    return alpha * mag_sq / count + (1.0 - alpha) * (re_sq / count + im_sq / count);
}

ComplexSpectrogram loss_tf_grad(const ComplexSpectrogram& clean, const ComplexSpectrogram& est,
                                double alpha) {
    check_same_shape(clean, est, "loss_tf_grad");
    const double count = static_cast<double>(clean.data.size());
    ComplexSpectrogram grad(est.num_frames, est.num_bins);
    for (std::size_t i = 0; i < est.data.size(); ++i) {
        double est_mag = std::abs(est.data[i]);
        double dm = std::abs(clean.data[i]) - est_mag;
        double g_re = (1.0 - alpha) * 2.0 * (est.data[i].real() - clean.data[i].real()) / count;
        double g_im = (1.0 - alpha) * 2.0 * (est.data[i].imag() - clean.data[i].imag()) / count;
        if (est_mag > 0.0) {
            double g_mag = alpha * (-2.0) * dm / count;
            g_re += g_mag * est.data[i].real() / est_mag;
            g_im += g_mag * est.data[i].imag() / est_mag;
        }
        grad.data[i] = std::complex<double>(g_re, g_im);
    }
    return grad;
}

double si_snr(const std::vector<double>& est, const std::vector<double>& clean) {
    if (est.size() != clean.size()) throw std::invalid_argument("si_snr: length mismatch");
    double clean_energy = dot(clean, clean);
    if (clean_energy <= 0.0) throw std::invalid_argument("si_snr: all-zero clean reference");
    double scale = dot(est, clean) / clean_energy;
    double proj_energy = scale * scale * clean_energy;
    double err_energy = 0.0;
    for (std::size_t i = 0; i < est.size(); ++i) {
        double e = scale * clean[i] - est[i];
        err_energy += e * e;
    }
    if (err_energy <= 0.0) return kSiSdrCapDb;
    if (proj_energy <= 0.0) return -kSiSdrCapDb;
    double value = 10.0 * std::log10(proj_energy / err_energy);
    return std::clamp(value, -kSiSdrCapDb, kSiSdrCapDb);
}

double loss_sisdr(const std::vector<double>& clean, const std::vector<double>& est) {
    return -si_snr(est, clean);
}

double si_snr_i(const std::vector<double>& noisy, const std::vector<double>& clean,
                const std::vector<double>& est) {
    return si_snr(est, clean) - si_snr(noisy, clean);
}

std::vector<double> si_snr_grad(const std::vector<double>& est, const std::vector<double>& clean) {
    if (est.size() != clean.size()) throw std::invalid_argument("si_snr_grad: length mismatch");
    double clean_energy = dot(clean, clean);
    if (clean_energy <= 0.0) throw std::invalid_argument("si_snr_grad: all-zero clean reference");
    double scale = dot(est, clean) / clean_energy;
    double proj_energy = scale * scale * clean_energy;
    std::vector<double> err(est.size());
    double err_energy = 0.0;
    for (std::size_t i = 0; i < est.size(); ++i) {
        err[i] = scale * clean[i] - est[i];
        err_energy += err[i] * err[i];
    }
    std::vector<double> grad(est.size(), 0.0);
    if (err_energy <= 0.0 || proj_energy <= 0.0) return grad;
    double value = 10.0 * std::log10(proj_energy / err_energy);
    if (value <= -kSiSdrCapDb || value >= kSiSdrCapDb) return grad;  // flat in the cap region
    const double c = 10.0 / std::log(10.0);
    // d proj_energy / d est = 2 * scale * clean; d err_energy / d est = -2 * err
    // (the error is orthogonal to clean, so the scale path cancels there).
    for (std::size_t i = 0; i < est.size(); ++i)
        grad[i] = c * (2.0 * scale * clean[i] / proj_energy + 2.0 * err[i] / err_energy);
    return grad;
}

double total_loss(double tf_loss, double si_sdr_db, double synops_penalty,
                  const LossWeights& weights) {
    return weights.gamma1 * tf_loss + weights.gamma2 * (100.0 - si_sdr_db) +
           weights.synops_weight * synops_penalty;
}

}  // namespace neurodenoise
