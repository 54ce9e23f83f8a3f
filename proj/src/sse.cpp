// Copyright 2026 The qsync Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qsync/sse.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <mutex>
#include <sstream>
#include <thread>

#include "qsync/rng.hpp"

namespace qsync {

void SseConfig::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("sse: dt must be positive");
    if (n_steps < 1) throw ValidationError("sse: n_steps must be >= 1");
    if (record_every < 1) throw ValidationError("sse: record_every must be >= 1");
    if (dt * model.max_rate() > 1e-2 * (1.0 + 1e-9)) {
        std::ostringstream os;
        os << "sse: dt * max rate = " << dt * model.max_rate() << " exceeds the 1e-2 stability guard";
        throw ValidationError(os.str());
    }
    if (noise) {
        noise->validate();
        if (model.dim() != 4) throw ValidationError("sse: noise requires a two-qubit model");
        if (!(noise_period > 0.0)) throw ValidationError("sse: noise_period must be positive when noise is set");
    }
}

namespace {

// Preallocated workspace for repeated steps of one model.
class Stepper {
public:
    Stepper(const LindbladModel& model, double dt) : model_(model), dt_(dt) {
        for (const auto& j : model.jumps()) {
            if (j.rate <= 0.0) continue;
            ops_.push_back(j.op);
            rates_.push_back(j.rate);
        }
        ov_.assign(ops_.size(), Ket::Zero(model.dim()));
        x_.assign(ops_.size(), 0.0);
        set_extra(nullptr);
        delta_ = Ket::Zero(model.dim());
    }

    void set_extra(const Operator* extra_h) {
        Operator h_eff = model_.hamiltonian();
        if (extra_h) h_eff += *extra_h;
        for (std::size_t k = 0; k < ops_.size(); ++k)
            h_eff -= cplx(0.0, 0.5 * rates_[k]) * (ops_[k].adjoint() * ops_[k]);
        a_ = cplx(0.0, -dt_) * h_eff;
    }

    // dw has one entry per model jump; channels with zero rate are skipped.
    void step(Ket& psi, std::span<const double> dw, bool renormalize, std::vector<double>* x_out) {
        delta_.noalias() = a_ * psi;
        double psi_coef_re = 0.0;
        std::size_t active = 0;
        for (std::size_t k = 0; k < model_.jumps().size(); ++k) {
            if (model_.jumps()[k].rate <= 0.0) continue;
            const std::size_t c = active++;
            ov_[c].noalias() = ops_[c] * psi;
            const double x = 2.0 * psi.dot(ov_[c]).real() / psi.squaredNorm();
            x_[c] = x;
            const double g = rates_[c], sg = std::sqrt(g);
            delta_ += (g * x * 0.5 * dt_ + sg * dw[k]) * ov_[c];
            psi_coef_re += -g * x * x * 0.125 * dt_ - sg * 0.5 * x * dw[k];
        }
        psi += delta_ + psi_coef_re * psi;
        const double nrm = psi.norm();
        if (!std::isfinite(nrm) || nrm > 1e6) throw NumericalError("sse_step: amplitudes diverged (step too large)");
        if (renormalize) {
            if (nrm == 0.0) throw NumericalError("sse_step: state collapsed to zero norm");
            psi /= nrm;
        }
        if (x_out) {
            x_out->assign(x_.begin(), x_.end());
        }
    }

private:
    const LindbladModel& model_;
    double dt_;
    std::vector<Operator> ops_;
    std::vector<double> rates_;
    std::vector<Ket> ov_;
    std::vector<double> x_;
    Operator a_;
    Ket delta_;
};

// Runs one trajectory, invoking `record(index, psi)` at every recorded step.
template <typename Record>
void integrate(const SseConfig& cfg, const Ket& psi0, std::uint64_t seed, Record&& record,
               std::vector<std::vector<double>>* x_records) {
    Stepper stepper(cfg.model, cfg.dt);
    CounterRng rng(seed, 0);
    std::normal_distribution<double> normal(0.0, std::sqrt(cfg.dt));
    const std::size_t nch = cfg.model.jumps().size();
    std::vector<double> dw(nch, 0.0);
    Ket psi = psi0;
    long noise_index = -1;
    record(0L, psi);
    std::vector<double> xs;
    for (long s = 0; s < cfg.n_steps; ++s) {
        if (cfg.noise) {
            const long k = static_cast<long>(std::floor((static_cast<double>(s) + 0.5) * cfg.dt / cfg.noise_period));
            if (k != noise_index) {
                noise_index = k;
                const Operator hn = sample_noise(*cfg.noise, k).hamiltonian();
                stepper.set_extra(&hn);
            }
        }
        for (std::size_t k = 0; k < nch; ++k) dw[k] = cfg.model.jumps()[k].rate > 0.0 ? normal(rng) : 0.0;
        stepper.step(psi, dw, cfg.renormalize, x_records ? &xs : nullptr);
        if (x_records) x_records->push_back(xs);
        if ((s + 1) % cfg.record_every == 0) record((s + 1) / cfg.record_every, psi);
    }
}

}  // namespace

Ket sse_step_raw(const Ket& psi, const LindbladModel& model, double dt, std::span<const double> dw,
                 const Operator* extra_h) {
    if (psi.size() != model.dim()) throw DimensionError("sse_step: state and model dimensions differ");
    if (dw.size() != model.jumps().size()) throw DimensionError("sse_step: need one Wiener increment per jump");
    Stepper stepper(model, dt);
    if (extra_h) stepper.set_extra(extra_h);
    Ket v = psi;
    stepper.step(v, dw, false, nullptr);
    return v;
}

PureState sse_step(const PureState& psi, const LindbladModel& model, double dt, std::span<const double> dw,
                   const Operator* extra_h) {
    return PureState(sse_step_raw(psi.amplitudes(), model, dt, dw, extra_h));
}

PureState sse_step(const PureState& psi, const LindbladModel& model, double dt, CounterRng& rng) {
    std::normal_distribution<double> normal(0.0, std::sqrt(dt));
    std::vector<double> dw(model.jumps().size());
    for (auto& w : dw) w = normal(rng);
    return sse_step(psi, model, dt, dw);
}

Trajectory run_trajectory(const SseConfig& cfg, const PureState& psi0) {
    cfg.validate();
    if (psi0.dim() != cfg.model.dim()) throw DimensionError("run_trajectory: state and model dimensions differ");
    Trajectory tr;
    tr.x_records.reserve(static_cast<std::size_t>(cfg.n_steps));
    integrate(
        cfg, psi0.amplitudes(), cfg.seed,
        [&](long idx, const Ket& psi) {
            tr.times.push_back(static_cast<double>(idx * cfg.record_every) * cfg.dt);
            tr.norms.push_back(psi.norm());
            tr.states.emplace_back(psi);
        },
        &tr.x_records);
    return tr;
}

EnsembleResult ensemble_average(const SseConfig& cfg, const PureState& psi0, long n_traj,
                                const std::vector<NamedObservable>& observables, bool keep_states,
                                unsigned threads) {
    cfg.validate();
    if (n_traj < 1) throw ValidationError("ensemble_average: n_traj must be >= 1");
    if (psi0.dim() != cfg.model.dim()) throw DimensionError("ensemble_average: state and model dimensions differ");
    const int d = cfg.model.dim();
    for (const auto& o : observables)
        if (o.op.rows() != d || o.op.cols() != d) throw DimensionError("ensemble_average: observable " + o.name);

    const std::size_t n_rec = static_cast<std::size_t>(cfg.n_steps / cfg.record_every) + 1;
    const std::size_t n_obs = observables.size();
    constexpr long kBlock = 8;
    const long n_blocks = (n_traj + kBlock - 1) / kBlock;

    struct Accum {
        std::vector<double> sum, sum_sq;
        std::vector<Operator> rho;
    };
    std::vector<Accum> blocks(static_cast<std::size_t>(n_blocks));

    auto run_block = [&](long b) {
        Accum acc;
        acc.sum.assign(n_rec * n_obs, 0.0);
        acc.sum_sq.assign(n_rec * n_obs, 0.0);
        if (keep_states) acc.rho.assign(n_rec, Operator::Zero(d, d));
        for (long j = b * kBlock; j < std::min(n_traj, (b + 1) * kBlock); ++j) {
            integrate(
                cfg, psi0.amplitudes(), derive_seed(cfg.seed, 0, static_cast<std::uint64_t>(j)),
                [&](long idx, const Ket& psi_raw) {
                    const Ket psi = psi_raw / psi_raw.norm();
                    const std::size_t r = static_cast<std::size_t>(idx);
                    for (std::size_t o = 0; o < n_obs; ++o) {
                        const double v = psi.dot(observables[o].op * psi).real();
                        acc.sum[r * n_obs + o] += v;
                        acc.sum_sq[r * n_obs + o] += v * v;
                    }
                    if (keep_states) acc.rho[r].noalias() += psi * psi.adjoint();
                },
                nullptr);
        }
        blocks[static_cast<std::size_t>(b)] = std::move(acc);
    };

    unsigned nthreads = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
    nthreads = static_cast<unsigned>(std::min<long>(nthreads, n_blocks));
    if (nthreads <= 1) {
        for (long b = 0; b < n_blocks; ++b) run_block(b);
    } else {
        std::atomic<long> next{0};
        std::vector<std::thread> pool;
        std::exception_ptr failure;
        std::mutex failure_mutex;
        for (unsigned t = 0; t < nthreads; ++t) {
            pool.emplace_back([&] {
                for (long b = next++; b < n_blocks; b = next++) {
                    try {
                        run_block(b);
                    } catch (...) {
                        std::lock_guard<std::mutex> lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        }
        for (auto& th : pool) th.join();
        if (failure) std::rethrow_exception(failure);
    }

    std::vector<double> sum(n_rec * n_obs, 0.0), sum_sq(n_rec * n_obs, 0.0);
    std::vector<Operator> rho_sum;
    if (keep_states) rho_sum.assign(n_rec, Operator::Zero(d, d));
    for (const auto& acc : blocks) {
        for (std::size_t i = 0; i < sum.size(); ++i) {
            sum[i] += acc.sum[i];
            sum_sq[i] += acc.sum_sq[i];
        }
        if (keep_states)
            for (std::size_t r = 0; r < n_rec; ++r) rho_sum[r] += acc.rho[r];
    }

    std::vector<std::string> labels;
    for (const auto& o : observables) labels.push_back(o.name);
    EnsembleResult out{ObservableSeries(labels), ObservableSeries(labels), n_traj >= 2, {}};
    const double n = static_cast<double>(n_traj);
    for (std::size_t r = 0; r < n_rec; ++r) {
        std::vector<double> mean(n_obs), se(n_obs, 0.0);
        for (std::size_t o = 0; o < n_obs; ++o) {
            const double s = sum[r * n_obs + o];
            mean[o] = s / n;
            if (n_traj >= 2) {
                const double var = std::max(0.0, (sum_sq[r * n_obs + o] - s * s / n) / (n - 1.0));
                se[o] = std::sqrt(var / n);
            }
        }
        const double t = static_cast<double>(static_cast<long>(r) * cfg.record_every) * cfg.dt;
        out.mean.append(static_cast<long>(r), t, std::move(mean));
        out.standard_error.append(static_cast<long>(r), t, std::move(se));
        if (keep_states) out.mean_states.push_back(DensityMatrix::trusted(rho_sum[r] / n));
    }
    return out;
}

}  // namespace qsync
