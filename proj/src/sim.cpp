#include "stackelberg/sim.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "stackelberg/posterior.hpp"

namespace stackelberg {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::int64_t kChunk = 2048;

// Running first and second moments of everything the report needs.
struct Accumulator {
  double js = 0, js2 = 0, jr = 0, jr2 = 0;
  MatrixList h, h2, cross, cross2;

  Accumulator(int n, Eigen::Index p)
      : h(n, Eigen::MatrixXd::Zero(p, p)),
        h2(h),
        cross(h),
        cross2(h) {}

  void add(const Trajectory& tr, bool control) {
    js += tr.cost_sender;
    js2 += tr.cost_sender * tr.cost_sender;
    jr += tr.cost_receiver;
    jr2 += tr.cost_receiver * tr.cost_receiver;
    for (std::size_t k = 0; k < h.size(); ++k) {
      const Eigen::MatrixXd hh = tr.xhat[k] * tr.xhat[k].transpose();
      const Eigen::MatrixXd hx = tr.xhat[k] * (control ? tr.x_o[k] : tr.x[k]).transpose();
      h[k] += hh;
      h2[k] += hh.cwiseProduct(hh);
      cross[k] += hx;
      cross2[k] += hx.cwiseProduct(hx);
    }
  }

  void merge(const Accumulator& o) {
    js += o.js;
    js2 += o.js2;
    jr += o.jr;
    jr2 += o.jr2;
    for (std::size_t k = 0; k < h.size(); ++k) {
      h[k] += o.h[k];
      h2[k] += o.h2[k];
      cross[k] += o.cross[k];
      cross2[k] += o.cross2[k];
    }
  }
};

Estimate estimate(double sum, double sum_sq, double n) {
  Estimate e;
  e.mean = sum / n;
  const double var = n > 1 ? std::max(0.0, (sum_sq - n * e.mean * e.mean) / (n - 1)) : 0.0;
  e.std_error = std::sqrt(var / n);
  return e;
}

Eigen::MatrixXd entrywise_se(const Eigen::MatrixXd& sum, const Eigen::MatrixXd& sum_sq, double n) {
  Eigen::MatrixXd out(sum.rows(), sum.cols());
  for (Eigen::Index i = 0; i < sum.size(); ++i) out(i) = estimate(sum(i), sum_sq(i), n).std_error;
  return out;
}

template <typename SamplePath>
SimReport run_paths(int horizon, Eigen::Index p, std::int64_t n_paths, std::uint64_t seed,
                    bool control, SamplePath&& sample_path) {
  if (n_paths < 1) throw std::invalid_argument("n_paths must be at least 1");
  const std::int64_t chunks = (n_paths + kChunk - 1) / kChunk;
  std::vector<Accumulator> partial(chunks, Accumulator(horizon, p));

  auto work = [&](std::int64_t first_chunk, std::int64_t stride) {
    for (std::int64_t c = first_chunk; c < chunks; c += stride) {
      const std::int64_t end = std::min(n_paths, (c + 1) * kChunk);
      for (std::int64_t i = c * kChunk; i < end; ++i) {
        auto stream = trajectory_stream(seed, static_cast<std::uint64_t>(i));
        partial[c].add(sample_path(stream), control);
      }
    }
  };
  const std::int64_t workers =
      std::clamp<std::int64_t>(std::thread::hardware_concurrency(), 1, std::max<std::int64_t>(chunks, 1));
  if (workers <= 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (std::int64_t t = 0; t < workers; ++t) pool.emplace_back(work, t, workers);
    for (auto& th : pool) th.join();
  }

  Accumulator total(horizon, p);
  for (const auto& a : partial) total.merge(a);

  SimReport rep;
  rep.n_paths = n_paths;
  rep.seed = seed;
  const double n = static_cast<double>(n_paths);
  rep.sender = estimate(total.js, total.js2, n);
  rep.receiver = estimate(total.jr, total.jr2, n);
  for (int k = 0; k < horizon; ++k) {
    rep.h.push_back(total.h[k] / n);
    rep.h_se.push_back(entrywise_se(total.h[k], total.h2[k], n));
    rep.cross.push_back(total.cross[k] / n);
    rep.cross_se.push_back(entrywise_se(total.cross[k], total.cross2[k], n));
  }
  return rep;
}

// Receiver control law with the Phi_R and K_R blocks pulled out once.
struct ControlLaw {
  MatrixList k_r;                  // per stage
  std::vector<MatrixList> phi_r;   // phi_r[k][c] for c < k

  explicit ControlLaw(const ControlTransform& ct) {
    for (int k = 1; k <= ct.horizon; ++k) {
      k_r.push_back(ct.block(ct.k_r, k, k, ct.t, ct.p));
      MatrixList row;
      for (int c = 1; c < k; ++c) row.push_back(ct.block(ct.phi_r, k, c, ct.t, ct.t));
      phi_r.push_back(std::move(row));
    }
  }

  Eigen::VectorXd next(std::size_t k, const Eigen::VectorXd& xhat,
                       const std::vector<Eigen::VectorXd>& u_prev) const {
    Eigen::VectorXd u = -k_r[k] * xhat;
    for (std::size_t c = 0; c < k; ++c) u -= phi_r[k][c] * u_prev[c];
    return u;
  }
};

Trajectory control_path(const ProcessModel& m, const ControlCosts& c, const PosteriorFilter& filter,
                        const ControlLaw& law, const GaussianSampler& init,
                        const GaussianSampler& noise, std::mt19937_64& stream) {
  const int n = m.horizon;
  Trajectory tr;
  tr.x.push_back(init(stream));
  tr.x_o.push_back(tr.x.front());
  Eigen::VectorXd xhat = Eigen::VectorXd::Zero(m.state_dim());
  for (int k = 0; k < n; ++k) {
    tr.y.push_back(filter.policy[k].transpose() * tr.x_o[k]);
    xhat = filter.step(k, xhat, tr.y[k]);
    tr.xhat.push_back(xhat);
    tr.u.push_back(law.next(k, xhat, tr.u));
    tr.w.push_back(noise(stream));
    tr.x.push_back(m.a * tr.x[k] + m.b * tr.u[k] + tr.w[k]);
    tr.x_o.push_back(virtual_state_step(m.a, tr.x_o[k], tr.w[k]));
    const Eigen::VectorXd& xn = tr.x[k + 1];
    tr.cost_sender += xn.dot(c.qs[k] * xn) + tr.u[k].dot(c.rs[k] * tr.u[k]);
    tr.cost_receiver += xn.dot(c.qr[k] * xn) + tr.u[k].dot(c.rr[k] * tr.u[k]);
  }
  return tr;
}

Trajectory comm_path(const ProcessModel& m, const CommCosts& c, const PosteriorFilter& filter,
                     const MatrixList& gains, const GaussianSampler& init,
                     const GaussianSampler& noise, std::mt19937_64& stream) {
  const int n = m.horizon;
  Trajectory tr;
  tr.x.push_back(init(stream));
  Eigen::VectorXd xhat = Eigen::VectorXd::Zero(m.state_dim());
  for (int k = 0; k < n; ++k) {
    tr.y.push_back(filter.policy[k].transpose() * tr.x[k]);
    xhat = filter.step(k, xhat, tr.y[k]);
    tr.xhat.push_back(xhat);
    tr.u.push_back(gains[k] * xhat);
    tr.cost_sender += (c.qs[k] * tr.x[k] + c.rs[k] * tr.u[k]).squaredNorm();
    tr.cost_receiver += (c.qr[k] * tr.x[k] + c.rr[k] * tr.u[k]).squaredNorm();
    tr.w.push_back(noise(stream));
    tr.x.push_back(virtual_state_step(m.a, tr.x[k], tr.w[k]));
  }
  tr.x_o = tr.x;
  return tr;
}

}  // namespace

std::mt19937_64 trajectory_stream(std::uint64_t master_seed, std::uint64_t index) {
  return std::mt19937_64(splitmix64(splitmix64(master_seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL)));
}

GaussianSampler::GaussianSampler(const Eigen::MatrixXd& cov) : root_(psd_sqrt(cov)) {}

Eigen::VectorXd GaussianSampler::operator()(std::mt19937_64& stream) const {
  std::normal_distribution<double> normal;
  Eigen::VectorXd z(root_.cols());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(stream);
  return root_ * z;
}

Trajectory sample_trajectory(const ProcessModel& m, const CommCosts& c, const PosteriorFilter& filter,
                             const MatrixList& gains, std::mt19937_64& stream) {
  return comm_path(m, c, filter, gains, GaussianSampler(m.sigma1), GaussianSampler(m.sigma_w), stream);
}

Trajectory sample_trajectory(const ProcessModel& m, const ControlCosts& c,
                             const PosteriorFilter& filter, const ControlTransform& ct,
                             std::mt19937_64& stream) {
  return control_path(m, c, filter, ControlLaw(ct), GaussianSampler(m.sigma1),
                      GaussianSampler(m.sigma_w), stream);
}

SimReport run(const ProcessModel& m, const CommCosts& c, const SignalingPolicy& policy,
              const MatrixList& gains, std::int64_t n_paths, std::uint64_t seed) {
  const PosteriorFilter filter = make_posterior_filter(m.a, covariance_schedule(m), policy.l);
  const GaussianSampler init(m.sigma1);
  const GaussianSampler noise(m.sigma_w);
  return run_paths(m.horizon, m.state_dim(), n_paths, seed, false, [&](std::mt19937_64& s) {
    return comm_path(m, c, filter, gains, init, noise, s);
  });
}

SimReport run(const ProcessModel& m, const ControlCosts& c, const SignalingPolicy& policy,
              const ControlTransform& ct, std::int64_t n_paths, std::uint64_t seed) {
  const PosteriorFilter filter = make_posterior_filter(m.a, covariance_schedule(m), policy.l);
  const ControlLaw law(ct);
  const GaussianSampler init(m.sigma1);
  const GaussianSampler noise(m.sigma_w);
  return run_paths(m.horizon, m.state_dim(), n_paths, seed, true, [&](std::mt19937_64& s) {
    return control_path(m, c, filter, law, init, noise, s);
  });
}

}  // namespace stackelberg
