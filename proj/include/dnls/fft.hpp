#pragma once

#include <complex>
#include <mutex>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

#include "dnls/field.hpp"

namespace dnls {

/// RAII wrapper around FFTW's complex d-dimensional transform on a box.
/// Plans are created with FFTW_UNALIGNED so they can execute on any buffer;
/// plan creation is serialized (the FFTW planner is not thread-safe), and
/// each instance owns its plans, so distinct trajectories never share state.
class Fft {
public:
    explicit Fft(const Box& b) : box_(b) {
        std::vector<int> dims(static_cast<std::size_t>(b.dim()), b.side());
        std::vector<std::complex<double>> probe(b.size());
        auto* ptr = reinterpret_cast<fftw_complex*>(probe.data());
        std::lock_guard<std::mutex> lock(plan_mutex());
        fwd_ = fftw_plan_dft(b.dim(), dims.data(), ptr, ptr, FFTW_FORWARD,
                             FFTW_ESTIMATE | FFTW_UNALIGNED);
        inv_ = fftw_plan_dft(b.dim(), dims.data(), ptr, ptr, FFTW_BACKWARD,
                             FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (!fwd_ || !inv_) throw std::runtime_error("Fft: planning failed");
    }

    ~Fft() {
        std::lock_guard<std::mutex> lock(plan_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(inv_);
    }

    Fft(const Fft&) = delete;
    Fft& operator=(const Fft&) = delete;

    const Box& box() const { return box_; }

    void forward(std::vector<std::complex<double>>& data) const {
        check(data);
        auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
        fftw_execute_dft(fwd_, ptr, ptr);
    }

    /// Inverse transform, normalized by 1/N.
    void inverse(std::vector<std::complex<double>>& data) const {
        check(data);
        auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
        fftw_execute_dft(inv_, ptr, ptr);
        const double scale = 1.0 / static_cast<double>(box_.size());
        for (auto& z : data) z *= scale;
    }

private:
    void check(const std::vector<std::complex<double>>& data) const {
        if (data.size() != box_.size()) throw std::invalid_argument("Fft: size mismatch");
    }

    static std::mutex& plan_mutex() {
        static std::mutex m;
        return m;
    }

    Box box_;
    fftw_plan fwd_;
    fftw_plan inv_;
};

}  // namespace dnls
