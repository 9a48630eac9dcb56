// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "ddafl/afl_engine.hpp"
#include "ddafl/channel.hpp"
#include "ddafl/config.hpp"
#include "ddafl/ddpg.hpp"
#include "ddafl/dense_net.hpp"
#include "ddafl/experiment.hpp"
#include "ddafl/local_model.hpp"
#include "ddafl/metrics.hpp"
#include "ddafl/rng.hpp"
#include "grad_check.hpp"
#include "oracles.hpp"

using namespace ddafl;
using oracle::big;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;

void report(int id, const char* title, bool ok, double seconds, double limit, const std::string& detail) {
  const bool in_time = limit <= 0.0 || seconds < limit;
  const bool pass = ok && in_time;
  if (!pass) ++failures;
  std::printf("criterion %d (%s): %s  [%s; %.1f s%s]\n", id, title, pass ? "PASS" : "FAIL", detail.c_str(), seconds,
              in_time ? "" : " over the time limit");
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double mean(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

double pop_sd(std::span<const double> v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

// ---------------------------------------------------------------- criterion 1

struct OracleTally {
  double worst = 0.0;
  std::string worst_name;
  void add(const char* name, double err) {
    if (!(err <= worst)) {
      worst = std::isnan(err) ? INFINITY : err;
      worst_name = name;
    }
  }
};

ModelParams random_params(const std::vector<std::size_t>& widths, Rng& rng, double scale) {
  ModelParams p = ModelParams::zeros(widths);
  std::vector<double> flat = p.flatten();
  for (double& x : flat) x = rng.uniform(-scale, scale);
  return ModelParams::unflatten(widths, flat);
}

void criterion_equation_oracles() {
  const auto start = Clock::now();
  Rng rng(20240601);
  OracleTally t;
  const int n = 100;
  const Position3 rsu{0.0, 0.0, 10.0};

  for (int i = 0; i < n; ++i) {
    const double d0 = rng.uniform(-200, 0), v = rng.uniform(0, 40), dt = rng.uniform(0.1, 1.0);
    const auto slot = static_cast<std::int64_t>(rng.index(200));
    const big sv = big(v) * big(slot) * big(dt);
    t.add("position", oracle::rel_err(advance_position(d0, v, slot, dt), oracle::position(d0, v, big(slot), dt),
                                      abs(big(d0)) + abs(sv)));
  }
  for (int i = 0; i < n; ++i) {
    const Position3 p{rng.uniform(-300, 300), rng.uniform(0, 20), rng.uniform(0, 2)};
    t.add("distance", oracle::rel_err(distance_to_rsu(p, rsu), oracle::distance(p.x, p.y, p.z, rsu.x, rsu.y, rsu.z)));
    t.add("angle", oracle::rel_err(cos_uplink_angle(p, rsu), oracle::cos_angle(p.x, p.y, p.z, rsu.x, rsu.y, rsu.z)));
  }
  for (int i = 0; i < n; ++i) {
    const double v = rng.uniform(0, 40), lambda = rng.uniform(0.1, 10), c = rng.uniform(-1, 1);
    t.add("doppler", oracle::rel_err(doppler_freq(v, lambda, c), oracle::doppler(v, lambda, c)));
    const double fd = rng.uniform(-3, 3), dt = rng.uniform(0.1, 1.0);
    t.add("correlation", oracle::rel_err(channel_correlation(fd, dt), oracle::correlation(fd, dt)));
  }
  for (int i = 0; i < n; ++i) {
    ChannelState s;
    s.gain = rng.complex_normal();
    s.rho = rng.uniform(-0.4, 1.0);
    const std::complex<double> e = rng.complex_normal();
    const std::complex<double> got = evolve_channel(s, e).gain;
    const big a = big(s.rho), b = sqrt(1 - big(s.rho) * big(s.rho));
    const big re = a * big(s.gain.real()) + b * big(e.real());
    const big im = a * big(s.gain.imag()) + b * big(e.imag());
    const big scale = abs(a) * big(std::abs(s.gain)) + b * big(std::abs(e));
    t.add("ar_gain", std::max(oracle::rel_err(got.real(), re, scale), oracle::rel_err(got.imag(), im, scale)));
  }
  for (int i = 0; i < n; ++i) {
    LinkBudget link;
    link.bandwidth_hz = rng.uniform(100, 1e6);
    link.tx_power_w = rng.uniform(0.01, 1.0);
    link.noise_power_w = rng.uniform(1e-13, 1e-9);
    link.path_loss_exp = rng.uniform(2.0, 4.0);
    const std::complex<double> g = rng.complex_normal();
    const double d = rng.uniform(1, 300);
    t.add("rate", oracle::rel_err(transmission_rate(link, g, d),
                                  oracle::rate(link.bandwidth_hz, link.tx_power_w, link.noise_power_w,
                                               link.path_loss_exp, big(g.real()) * g.real() + big(g.imag()) * g.imag(),
                                               d)));
  }
  for (int i = 0; i < n; ++i) {
    const double data = rng.uniform(50, 500), c0 = rng.uniform(1e5, 1e7), mu = rng.uniform(1e8, 3e9);
    t.add("local_delay", oracle::rel_err(local_training_delay(data, c0, mu), oracle::local_delay(data, c0, mu)));
    const double bits = rng.uniform(1e3, 1e5), r = rng.uniform(1e3, 1e5);
    t.add("upload_delay", oracle::rel_err(upload_delay(bits, r), oracle::upload_delay(bits, r)));
    const double m = rng.uniform(0.5, 0.99), tl = rng.uniform(0, 5), tu = rng.uniform(0, 5);
    t.add("beta1", oracle::rel_err(staleness_weight_local(tl, m), oracle::staleness(m, tl)));
    t.add("beta2", oracle::rel_err(staleness_weight_tx(tu, m), oracle::staleness(m, tu)));
  }
  for (int i = 0; i < n; ++i) {
    const double r = rng.uniform(-10, 0), gamma = rng.uniform(0.01, 0.999), q = rng.uniform(-100, 100);
    t.add("td_target", oracle::rel_err(target_value(r, gamma, q), oracle::target(r, gamma, q),
                                       abs(big(r)) + abs(big(gamma) * q)));
  }
  for (int i = 0; i < n; ++i) {
    const std::size_t k = 5;
    std::vector<double> lambdas(k), delays(k);
    std::vector<bool> mask(k);
    for (std::size_t v = 0; v < k; ++v) {
      lambdas[v] = rng.uniform(0.01, 1.0);
      delays[v] = rng.uniform(0.0, 2.0);
      mask[v] = rng.uniform() < 0.6;
    }
    mask[rng.index(k)] = true;
    const double loss = rng.uniform(0, 3), w1 = rng.uniform(0, 2), w2 = rng.uniform(0, 2);
    big lsum = 0, dsum = 0, count = 0;
    for (std::size_t v = 0; v < k; ++v) {
      lsum += lambdas[v];
      if (mask[v]) {
        dsum += delays[v];
        count += 1;
      }
    }
    const big expect = -(big(k) / lsum) * (big(w1) * loss + big(w2) * (dsum / count));
    t.add("reward", oracle::rel_err(reward(lambdas, mask, loss, delays, w1, w2), expect));
  }
  for (int i = 0; i < n; ++i) {
    const std::vector<std::size_t> arch{3, 4, 2};
    const ModelParams online = random_params(arch, rng, 2.0);
    ModelParams target = random_params(arch, rng, 2.0);
    const ModelParams before = target;
    const double tau = rng.uniform(1e-4, 1.0);
    soft_update(online, target, tau);
    const auto o = online.flatten(), b = before.flatten(), a = target.flatten();
    for (std::size_t j = 0; j < a.size(); ++j)
      t.add("soft_update", oracle::rel_err(a[j], oracle::soft(o[j], b[j], tau),
                                           abs(big(tau) * o[j]) + abs((1 - big(tau)) * b[j])));
  }
  for (int i = 0; i < n; ++i) {
    const std::vector<std::size_t> arch{4, 3, 10};
    const ModelParams local = random_params(arch, rng, 1.0);
    const double b1 = rng.uniform(0.5, 1.2), b2 = rng.uniform(0.5, 1.2);
    const auto got = weighted_model(local, b1, b2).flatten(), w = local.flatten();
    for (std::size_t j = 0; j < w.size(); ++j)
      t.add("weighted_model", oracle::rel_err(got[j], big(b1) * big(b2) * big(w[j])));

    GlobalModel g{random_params(arch, rng, 1.0), 3};
    Upload up;
    up.weighted_model = random_params(arch, rng, 1.0);
    const double beta = rng.uniform(0.01, 0.99);
    const auto next = global_update(g, up, beta).params.flatten();
    const auto old_w = g.params.flatten(), new_w = up.weighted_model.flatten();
    for (std::size_t j = 0; j < next.size(); ++j)
      t.add("global_update", oracle::rel_err(next[j], oracle::mix(beta, old_w[j], new_w[j]),
                                             abs(big(beta) * old_w[j]) + abs((1 - big(beta)) * new_w[j])));
  }
  for (int i = 0; i < n; ++i) {
    // Closed-form case of the loss: one softmax layer, no hidden units.
    const std::size_t f = 6, count = 1 + rng.index(12);
    const ModelParams p = random_params({f, 10}, rng, 1.5);
    LabeledBatch batch;
    batch.inputs = Eigen::MatrixXd(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(count));
    std::vector<std::vector<double>> xs(count, std::vector<double>(f));
    for (std::size_t s = 0; s < count; ++s) {
      for (std::size_t j = 0; j < f; ++j) {
        xs[s][j] = rng.uniform();
        batch.inputs(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(s)) = xs[s][j];
      }
      batch.labels.push_back(static_cast<int>(rng.index(10)));
    }
    std::vector<std::vector<double>> w(10, std::vector<double>(f));
    std::vector<double> b(10);
    for (std::size_t c = 0; c < 10; ++c) {
      b[c] = p.biases[0](static_cast<Eigen::Index>(c));
      for (std::size_t j = 0; j < f; ++j) w[c][j] = p.weights[0](static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(j));
    }
    t.add("cross_entropy", oracle::rel_err(cross_entropy_loss(p, batch), oracle::softmax_ce(w, b, xs, batch.labels)));
  }

  const double secs = seconds_since(start);
  report(1, "equation oracles", t.worst <= 1e-9, secs, 10.0,
         "worst relative error " + fmt("%.3g", t.worst) + " in " + t.worst_name + ", limit 1e-9");
}

// ---------------------------------------------------------------- criterion 2

void criterion_channel_statistics() {
  const auto start = Clock::now();
  const SimConfig cfg;
  const int steps = 100000;
  bool ok = true;
  std::string detail;
  std::uint64_t seed = 11;
  // Configured rho from the default geometry at three uplink angles.
  for (double cos_theta : {2.0 / 3.0, 0.3, 0.1}) {
    const double rho = channel_correlation(doppler_freq(cfg.speed, cfg.wavelength, cos_theta), cfg.slot_duration);
    Rng rng(seed++);
    ChannelState s;
    s.gain = rng.complex_normal();
    s.rho = rho;
    std::complex<double> prev = s.gain;
    double power = 0.0, lag1 = 0.0;
    for (int i = 0; i < steps; ++i) {
      s = evolve_channel(s, rng.complex_normal());
      power += std::norm(s.gain);
      lag1 += (s.gain * std::conj(prev)).real();
      prev = s.gain;
    }
    const double var = power / steps;
    const double acf = (lag1 / steps) / var;
    const bool cell = std::fabs(acf - rho) <= 0.02 && std::fabs(var - 1.0) <= 0.03;
    ok = ok && cell;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%srho %.4f: lag1 %.4f var %.4f", detail.empty() ? "" : "; ", rho, acf, var);
    detail += buf;
  }
  report(2, "channel statistics", ok, seconds_since(start), 30.0, detail);
}

// ---------------------------------------------------------------- criterion 3

Eigen::MatrixXd uniform_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double lo, double hi) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.uniform(lo, hi);
  return m;
}

void criterion_gradient_checks() {
  const auto start = Clock::now();
  Rng rng(303);
  double worst_cls = 0.0, worst_critic = 0.0, worst_actor = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const ModelParams p = glorot_init({8, 6, 10}, 1000 + trial);
    LabeledBatch b;
    b.inputs = uniform_matrix(8, 5, rng, 0.0, 1.0);
    for (int s = 0; s < 5; ++s) b.labels.push_back(static_cast<int>(rng.index(10)));
    const ModelParams fd = testing::central_difference(p, [&](const ModelParams& q) { return cross_entropy_loss(q, b); });
    worst_cls = std::max(worst_cls, testing::relative_error(gradient(p, b), fd));
  }
  const std::size_t k = 5;
  for (int trial = 0; trial < 30; ++trial) {
    const ModelParams actor = glorot_init({4 * k, 8, k}, 2000 + trial);
    const ModelParams critic = glorot_init({5 * k, 8, 1}, 3000 + trial);
    Minibatch mb;
    mb.states = uniform_matrix(4 * k, 6, rng, 0.0, 1.0);
    mb.actions = uniform_matrix(k, 6, rng, 0.0, 1.0);
    mb.rewards = uniform_matrix(1, 6, rng, -3.0, 0.0);
    mb.next_states = uniform_matrix(4 * k, 6, rng, 0.0, 1.0);
    Eigen::RowVectorXd y = uniform_matrix(1, 6, rng, -3.0, 0.0);
    const CriticLoss cl = critic_loss(critic, mb, y);
    const ModelParams fd_c =
        testing::central_difference(critic, [&](const ModelParams& c) { return critic_loss(c, mb, y).loss; });
    worst_critic = std::max(worst_critic, testing::relative_error(cl.grad, fd_c));
    const ModelParams fd_a = testing::central_difference(
        actor, [&](const ModelParams& a) { return actor_objective(a, critic, mb.states); });
    worst_actor = std::max(worst_actor, testing::relative_error(actor_gradient(actor, critic, mb.states), fd_a));
  }
  const double worst = std::max({worst_cls, worst_critic, worst_actor});
  char buf[200];
  std::snprintf(buf, sizeof buf, "classifier 8-6-10 %.2g, critic 20+5-8-1 %.2g, actor 20-8-5 %.2g, limit 1e-4",
                worst_cls, worst_critic, worst_actor);
  report(3, "gradient checks", worst <= 1e-4, seconds_since(start), 60.0, buf);
}

// ---------------------------------------------------------- criteria 4 to 9

struct Shared {
  PolicyCache cache;
  SimConfig cfg;
  double train_seconds = 0.0;
  std::size_t defended_runs = 0;
  std::size_t filter_calls = 0;
  std::size_t violations = 0;

  void account(const ExperimentResult& r) {
    if (!settings_for(r.scheme, cfg).defense_on) return;
    ++defended_runs;
    filter_calls += r.filter_calls;
    violations += r.filter_violations;
  }
};

ExperimentOptions test_only(PolicyCache& cache) {
  ExperimentOptions o;
  o.cache = &cache;
  o.include_training_rows = false;
  return o;
}

void criterion_convergence(Shared& sh) {
  const auto start = Clock::now();
  const TrainedPolicy& pol = sh.cache.get(sh.cfg, sh.cfg.seed, Scheme::ddafl);
  sh.train_seconds = seconds_since(start);
  const std::vector<double>& r = pol.episode_rewards;
  const std::span<const double> first(r.data(), 15), last(r.data() + r.size() - 15, 15);
  const bool ok = r.size() == 150 && mean(last) > mean(first) && pop_sd(last) < pop_sd(first);
  char buf[200];
  std::snprintf(buf, sizeof buf, "%zu episodes; first 15 mean %.3f sd %.3f, last 15 mean %.3f sd %.3f", r.size(),
                mean(first), pop_sd(first), mean(last), pop_sd(last));
  report(4, "DDPG convergence", ok, seconds_since(start), 600.0, buf);
}

void criterion_bad_node(Shared& sh) {
  const auto start = Clock::now();
  const std::uint64_t seed = sh.cfg.seed;
  const ExperimentResult dd = run_experiment(Scheme::ddafl, sh.cfg, seed, test_only(sh.cache));
  const ExperimentResult pa = run_experiment(Scheme::plain_afl, sh.cfg, seed, test_only(sh.cache));
  const ExperimentResult sy = run_experiment(Scheme::sync_fl, sh.cfg, seed, test_only(sh.cache));
  sh.account(dd);
  const auto bad = static_cast<std::size_t>(sh.cfg.bad_vehicle);
  double normal = 0.0;
  for (std::size_t v = 0; v < dd.admission_rate.size(); ++v)
    if (v != bad) normal += dd.admission_rate[v];
  normal /= static_cast<double>(dd.admission_rate.size() - 1);
  const double bad_rate = dd.admission_rate.at(bad);
  const bool ok = dd.final_avg_loss < pa.final_avg_loss && dd.final_avg_loss < sy.final_avg_loss &&
                  bad_rate < 0.5 * normal && dd.world_digest == pa.world_digest && pa.world_digest == sy.world_digest;
  char buf[240];
  std::snprintf(buf, sizeof buf,
                "final avg_loss ddafl %.4f, plain_afl %.4f, sync_fl %.4f; admission bad %.3f vs normal mean %.3f; "
                "training shared with criterion 4",
                dd.final_avg_loss, pa.final_avg_loss, sy.final_avg_loss, bad_rate, normal);
  report(5, "bad-node screening", ok, seconds_since(start) + sh.train_seconds, 600.0, buf);
}

void criterion_ablations(Shared& sh) {
  const auto start = Clock::now();
  SimConfig cfg = sh.cfg;
  cfg.episodes = 30;
  PolicyCache cache;
  int holds = 0;
  std::string detail = "episodes 30;";
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const ExperimentResult dd = run_experiment(Scheme::ddafl, cfg, seed, test_only(cache));
    const ExperimentResult lt = run_experiment(Scheme::ddafl_no_lt, cfg, seed, test_only(cache));
    const ExperimentResult ct = run_experiment(Scheme::ddafl_no_ct, cfg, seed, test_only(cache));
    sh.account(dd);
    sh.account(lt);
    sh.account(ct);
    const bool cell = dd.final_avg_loss <= lt.final_avg_loss && dd.final_avg_loss <= ct.final_avg_loss &&
                      dd.world_digest == lt.world_digest && dd.world_digest == ct.world_digest;
    holds += cell ? 1 : 0;
    char buf[160];
    std::snprintf(buf, sizeof buf, " s%llu %.4f/%.4f/%.4f%s", static_cast<unsigned long long>(seed),
                  dd.final_avg_loss, lt.final_avg_loss, ct.final_avg_loss, cell ? "" : " (no)");
    detail += buf;
  }
  detail += "; holds in " + std::to_string(holds) + " of 5";
  report(6, "ablations", holds >= 4, seconds_since(start), 900.0, detail);
}

void criterion_byzantine(Shared& sh) {
  const auto start = Clock::now();
  const std::vector<double> fractions{0.0, 0.4};
  bool ok = true;
  std::string detail;
  for (AttackKind kind : {AttackKind::class_flip, AttackKind::data_flip}) {
    const std::vector<SweepPoint> pts = attack_sweep(sh.cfg, fractions, kind, sh.cfg.seed, &sh.cache);
    const SweepPoint& clean = pts.at(0);
    const SweepPoint& hit = pts.at(1);
    sh.defended_runs += 2;
    sh.violations += clean.filter_violations + hit.filter_violations;
    const bool cell = hit.defended_accuracy >= hit.undefended_accuracy &&
                      hit.defended_tail_variance < hit.undefended_tail_variance &&
                      hit.undefended_error - hit.defended_error >= 0.05 &&
                      std::fabs(hit.defended_error - clean.defended_error) <= 0.03;
    ok = ok && cell;
    char buf[320];
    std::snprintf(buf, sizeof buf,
                  "%s%s: acc def %.4f undef %.4f, tail var def %.3g undef %.3g, err@0.4 def %.4f undef %.4f, "
                  "def err@0 %.4f",
                  detail.empty() ? "" : "; ", kind == AttackKind::class_flip ? "class_flip" : "data_flip",
                  hit.defended_accuracy, hit.undefended_accuracy, hit.defended_tail_variance,
                  hit.undefended_tail_variance, hit.defended_error, hit.undefended_error, clean.defended_error);
    detail += buf;
  }
  report(7, "Byzantine defense", ok, seconds_since(start) + sh.train_seconds, 1200.0, detail);
}

void criterion_filter_soundness(const Shared& sh) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu defended runs above, %zu filter calls in experiment runs, %zu violations",
                sh.defended_runs, sh.filter_calls, sh.violations);
  report(8, "filter soundness", sh.defended_runs > 0 && sh.violations == 0, 0.0, 0.0, buf);
}

std::string metrics_bytes(Scheme scheme, const SimConfig& cfg, std::uint64_t seed) {
  PolicyCache fresh;
  ExperimentOptions o;
  o.cache = &fresh;
  const ExperimentResult r = run_experiment(scheme, cfg, seed, o);
  std::ostringstream out;
  emit_metrics(r.rows, out);
  return out.str();
}

void criterion_determinism() {
  const auto start = Clock::now();
  SimConfig cfg;
  cfg.episodes = 3;
  cfg.slots_per_episode = 8;
  cfg.test_episodes = 2;
  cfg.minibatch = 8;
  cfg.attack = "class_flip";
  cfg.attack_fraction = 0.4;
  int identical = 0, cells = 0;
  std::size_t bytes = 0;
  for (Scheme s : {Scheme::ddafl, Scheme::ddafl_no_defense, Scheme::ddafl_no_lt, Scheme::ddafl_no_ct,
                   Scheme::plain_afl, Scheme::sync_fl}) {
    const std::string a = metrics_bytes(s, cfg, 42);
    const std::string b = metrics_bytes(s, cfg, 42);
    ++cells;
    identical += (a == b && !a.empty()) ? 1 : 0;
    bytes += a.size();
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "%d of %d scheme cells byte-identical on re-run (%zu CSV bytes)", identical, cells,
                bytes);
  report(9, "determinism", identical == cells, seconds_since(start), 0.0, buf);
}

}  // namespace

int main() {
  criterion_equation_oracles();
  criterion_channel_statistics();
  criterion_gradient_checks();

  Shared sh;
  sh.cfg.episodes = 150;
  criterion_convergence(sh);
  criterion_bad_node(sh);
  criterion_ablations(sh);
  criterion_byzantine(sh);
  criterion_filter_soundness(sh);
  criterion_determinism();

  std::printf("%s: %d criteria failed\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
  return failures == 0 ? 0 : 1;
}
