#include <doctest.h>

#include <nlohmann/json.hpp>

#include <numeric>

#include "oracles.hpp"
#include "toothlift/error.hpp"
#include "toothlift/hungarian.hpp"
#include "toothlift/neural/dgap.hpp"
#include "toothlift/neural/feature_map.hpp"
#include "toothlift/neural/grad_check.hpp"
#include "toothlift/neural/losses.hpp"
#include "toothlift/neural/params_io.hpp"

using namespace toothlift;
using namespace toothlift::neural;

namespace {

FeatureMap<double> random_map(oracle::Rng& rng, int c, int h, int w) {
  FeatureMap<double> m(c, h, w);
  for (Eigen::Index i = 0; i < m.data.size(); ++i) m.data.data()[i] = oracle::uniform(rng, -1, 1);
  return m;
}

// Channel `ch` of a feature map as an H x W matrix.
Eigen::MatrixXd plane(const FeatureMap<double>& m, int ch) {
  Eigen::MatrixXd out(m.height, m.width);
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) out(y, x) = m.pixel(x, y)[ch];
  }
  return out;
}

Eigen::MatrixXd random_matrix(oracle::Rng& rng, int r, int c, double lo = -1, double hi = 1) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = oracle::uniform(rng, lo, hi);
  return m;
}

Eigen::MatrixXd random_probs(oracle::Rng& rng, int n) {
  Eigen::MatrixXd p = random_matrix(rng, n, kLossClasses, 0.01, 1.0);
  p.array().colwise() /= p.rowwise().sum().array();
  return p;
}

}  // namespace

TEST_CASE("bilinear sampling examples") {
  Eigen::MatrixXd vals(1, 2);
  vals << 0.0, 1.0;
  const FeatureMap<double> m(1, 2, vals);
  Points<double> p(2, 3);
  p << 0.5, 1.0, 1.5, 0.5, 0.5, 0.5;
  const Eigen::MatrixXd s = bilinear_sample(m, p);
  CHECK(s(0, 0) == 0.0);
  CHECK(s(0, 1) == 0.5);
  CHECK(s(0, 2) == 1.0);
  // clamped outside the domain
  Points<double> far(2, 2);
  far << -7.0, 40.0, 0.5, -3.0;
  const Eigen::MatrixXd f = bilinear_sample(m, far);
  CHECK(f(0, 0) == 0.0);
  CHECK(f(0, 1) == 1.0);
}

TEST_CASE("bilinear sampling matches the four-corner reference") {
  oracle::Rng rng(89);
  for (int trial = 0; trial < 50; ++trial) {
    const int h = oracle::uniform_int(rng, 1, 9), w = oracle::uniform_int(rng, 1, 9), c = oracle::uniform_int(rng, 1, 3);
    const FeatureMap<double> m = random_map(rng, c, h, w);
    Points<double> p(2, 40);
    for (Eigen::Index k = 0; k < p.cols(); ++k) {
      p(0, k) = oracle::uniform(rng, -1, w + 1);
      p(1, k) = oracle::uniform(rng, -1, h + 1);
    }
    const Eigen::MatrixXd s = bilinear_sample(m, p);
    for (int ch = 0; ch < c; ++ch) {
      const Eigen::MatrixXd img = plane(m, ch);
      for (Eigen::Index k = 0; k < p.cols(); ++k) CHECK(std::abs(s(ch, k) - oracle::bilinear_ref(img, p(0, k), p(1, k))) < 1e-12);
    }
  }
}

TEST_CASE("reference grids") {
  const Points<double> g = reference_grid<double>(2, 2, 1);
  Points<double> expect(2, 4);
  expect << 0.5, 1.5, 0.5, 1.5, 0.5, 0.5, 1.5, 1.5;
  CHECK(g == expect);
  const Points<double> g2 = reference_grid<double>(4, 4, 2);
  expect << 1, 3, 1, 3, 1, 1, 3, 3;
  CHECK(g2 == expect);

  oracle::Rng rng(97);
  for (int trial = 0; trial < 100; ++trial) {
    const int h = oracle::uniform_int(rng, 1, 40), w = oracle::uniform_int(rng, 1, 40), s = oracle::uniform_int(rng, 1, 12);
    const Points<double> p = reference_grid<double>(h, w, s);
    CHECK(p.cols() == ((h + s - 1) / s) * ((w + s - 1) / s));
    CHECK(p.row(0).minCoeff() > 0);
    CHECK(p.row(0).maxCoeff() < w);
    CHECK(p.row(1).maxCoeff() < h);
  }
  CHECK_THROWS_AS(reference_grid<double>(4, 4, 0), ArgumentError);
}

TEST_CASE("DGAP with a zero branch is the identity") {
  oracle::Rng rng(101);
  for (int stride : {1, 2, 3}) {
    const FeatureMap<double> in = random_map(rng, 4, 7, 9);
    DgapParams<double> p = DgapParams<double>::random(4, 4, stride, 0.5, rng);
    p.w1.setZero();
    p.b1.setZero();
    p.w2.setZero();
    p.b2.setZero();
    p.wo.setZero();
    const FeatureMap<double> out = dgap_forward(in, p);
    CHECK((out.data - in.data).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(dgap_forward(in, DgapParams<double>::zeros(4, 2, stride)).data == in.data);
  }
}

TEST_CASE("DGAP with zero offsets is input plus plain attention") {
  oracle::Rng rng(103);
  for (int trial = 0; trial < 10; ++trial) {
    const int c = oracle::uniform_int(rng, 1, 5), h = oracle::uniform_int(rng, 2, 8), w = oracle::uniform_int(rng, 2, 8);
    const int stride = 1 + trial % 3;
    const FeatureMap<double> in = random_map(rng, c, h, w);
    DgapParams<double> p = DgapParams<double>::random(c, c, stride, 0.7, rng);
    p.w2.setZero();
    p.b2.setZero();
    const FeatureMap<double> out = dgap_forward(in, p);

    // tokens at the cell centres, attention by loops, upsampled per channel
    const Points<double> grid = reference_grid<double>(h, w, stride);
    Eigen::MatrixXd tokens(c, grid.cols());
    for (int ch = 0; ch < c; ++ch) {
      const Eigen::MatrixXd img = plane(in, ch);
      for (Eigen::Index k = 0; k < grid.cols(); ++k) tokens(ch, k) = oracle::bilinear_ref(img, grid(0, k), grid(1, k));
    }
    const Eigen::MatrixXd att = oracle::plain_attention(tokens, p.wq, p.wk, p.wv, p.wo);
    const int gh = (h + stride - 1) / stride, gw = (w + stride - 1) / stride;
    double worst = 0.0;
    for (int ch = 0; ch < c; ++ch) {
      Eigen::MatrixXd coarse(gh, gw);
      for (int j = 0; j < gh; ++j) {
        for (int i = 0; i < gw; ++i) coarse(j, i) = att(ch, j * gw + i);
      }
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const double up = oracle::bilinear_ref(coarse, (x + 0.5) / stride, (y + 0.5) / stride);
          worst = std::max(worst, std::abs(out.pixel(x, y)[ch] - (in.pixel(x, y)[ch] + up)));
        }
      }
    }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("DGAP with a single grid point adds the projected value everywhere") {
  oracle::Rng rng(107);
  const FeatureMap<double> in = random_map(rng, 3, 5, 6);
  DgapParams<double> p = DgapParams<double>::random(3, 3, 8, 0.5, rng);
  DgapCache<double> cache;
  const FeatureMap<double> out = dgap_forward(in, p, &cache);
  REQUIRE(cache.attention.size() == 1);
  CHECK(cache.attention(0, 0) == 1.0);
  const Eigen::VectorXd added = p.wo * (p.wv * cache.deformed.col(0));
  for (Eigen::Index k = 0; k < in.data.cols(); ++k) CHECK((out.data.col(k) - in.data.col(k) - added).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("DGAP argument checks") {
  oracle::Rng rng(109);
  const FeatureMap<double> in = random_map(rng, 3, 4, 4);
  CHECK_THROWS_AS(dgap_forward(in, DgapParams<double>::zeros(2, 2, 1)), ArgumentError);
  DgapParams<double> bad = DgapParams<double>::zeros(3, 2, 1);
  bad.grid_stride = 0;
  CHECK_THROWS_AS(dgap_forward(in, bad), ArgumentError);
  bad = DgapParams<double>::zeros(3, 2, 1);
  bad.max_offset = -1;
  CHECK_THROWS_AS(dgap_forward(in, bad), ArgumentError);
  bad = DgapParams<double>::zeros(3, 2, 1);
  bad.wq(0, 0) = std::nan("");
  CHECK_THROWS_AS(dgap_forward(in, bad), ArgumentError);
  CHECK_THROWS_AS(FeatureMap<double>(0, 2, 2), ArgumentError);
}

TEST_CASE("DGAP parameters flatten and round-trip through files") {
  oracle::Rng rng(113);
  const DgapParams<double> p = DgapParams<double>::random(3, 5, 2, 1.0, rng);
  const Eigen::VectorXd flat = p.flatten();
  CHECK(flat.size() == p.size());
  CHECK(p.unflatten(flat).flatten() == flat);
  CHECK_THROWS_AS(p.unflatten(Eigen::VectorXd::Zero(3)), ArgumentError);

  const auto dir = oracle::scratch_dir("params");
  save_dgap_params(dir / "dgap", p);
  const DgapParams<double> back = load_dgap_params(dir / "dgap");
  CHECK(back.flatten() == flat);
  CHECK(back.grid_stride == 2);
  CHECK(back.max_offset == p.max_offset);
  CHECK(back.hidden() == 5);
}

TEST_CASE("grad_check examples") {
  const std::function<double(const Eigen::VectorXd&)> sq = [](const Eigen::VectorXd& x) { return x.squaredNorm(); };
  const Eigen::Vector2d x(1, 2);
  const auto ok = grad_check<double>(sq, Eigen::Vector2d(2, 4), x, 1e-5);
  CHECK(ok.max_relative_error < 1e-8);
  CHECK(ok.numeric.isApprox(Eigen::Vector2d(2, 4), 1e-8));

  // |2g - g| / max(|2g|, |g|) = 1/2
  const auto twice = grad_check<double>(sq, Eigen::Vector2d(4, 8), x, 1e-5);
  CHECK(std::abs(twice.max_relative_error - 0.5) < 1e-8);

  const std::function<double(const Eigen::VectorXd&)> blow = [](const Eigen::VectorXd& v) { return std::log(v[0]); };
  CHECK_THROWS_AS(grad_check<double>(blow, Eigen::VectorXd::Ones(1), Eigen::VectorXd::Zero(1), 1e-5), NumericError);
  CHECK_THROWS_AS(grad_check<double>(sq, Eigen::Vector2d(2, 4), x, 0.0), ArgumentError);
}

TEST_CASE("DGAP gradients match central differences") {
  oracle::Rng rng(127);
  for (int stride : {1, 2}) {
    const FeatureMap<double> in = random_map(rng, 3, 5, 5);
    const DgapParams<double> p = DgapParams<double>::random(3, 4, stride, 0.6, rng);
    const Eigen::MatrixXd weight = random_matrix(rng, 3, 25);
    DgapCache<double> cache;
    dgap_forward(in, p, &cache);
    const DgapGradients<double> g = dgap_backward(in, p, cache, weight);
    const std::function<double(const Eigen::VectorXd&)> f = [&](const Eigen::VectorXd& v) {
      return dgap_forward(in, p.unflatten(v)).data.cwiseProduct(weight).sum();
    };
    CHECK(grad_check<double>(f, g.params.flatten(), p.flatten()).max_relative_error < 1e-4);
    const std::function<double(const Eigen::VectorXd&)> fi = [&](const Eigen::VectorXd& v) {
      return dgap_forward(FeatureMap<double>(5, 5, v.reshaped(3, 25)), p).data.cwiseProduct(weight).sum();
    };
    CHECK(grad_check<double>(fi, g.input.reshaped(), in.data.reshaped()).max_relative_error < 1e-4);
  }
}

TEST_CASE("matched classification loss") {
  Eigen::MatrixXd probs = Eigen::MatrixXd::Zero(1, kLossClasses);
  probs(0, 4) = std::exp(-1.0);
  probs(0, 0) = 1.0 - probs(0, 4);
  AssignmentResult one;
  one.pairs = {{0, 0}};
  CHECK(loss_mc(probs, one, {4}).value == doctest::Approx(1.0).epsilon(1e-14));
  probs.setZero();
  probs(0, 4) = 1.0;
  CHECK(loss_mc(probs, one, {4}).value == 0.0);
  const auto clamped = loss_mc(probs, one, {5});
  CHECK(clamped.clamped);
  CHECK(clamped.value == doctest::Approx(-std::log(1e-12)));

  oracle::Rng rng(131);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = oracle::uniform_int(rng, 1, 8), m = oracle::uniform_int(rng, 1, 8);
    const Eigen::MatrixXd p = random_probs(rng, n);
    std::vector<int> gt(static_cast<std::size_t>(m));
    for (auto& c : gt) c = oracle::uniform_int(rng, 0, 16);
    Eigen::MatrixXd cost(n, m);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < m; ++j) cost(i, j) = -std::log(p(i, gt[static_cast<std::size_t>(j)]));
    }
    const AssignmentResult a = hungarian(cost);
    double ref = 0.0;
    for (const auto& [i, j] : a.pairs) ref -= std::log(p(i, gt[static_cast<std::size_t>(j)]));
    const double value = loss_mc(p, a, gt).value;
    CHECK(std::abs(value - ref) < 1e-12);

    // permuting prediction rows and cost rows together leaves the loss alone
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Eigen::MatrixXd pp(n, kLossClasses), pc(n, m);
    for (int i = 0; i < n; ++i) {
      pp.row(i) = p.row(perm[static_cast<std::size_t>(i)]);
      pc.row(i) = cost.row(perm[static_cast<std::size_t>(i)]);
    }
    CHECK(std::abs(loss_mc(pp, hungarian(pc), gt).value - value) < 1e-9);
  }
  CHECK_THROWS_AS(loss_mc(Eigen::MatrixXd::Zero(1, 3), one, {0}), ArgumentError);
  CHECK_THROWS_AS(loss_mc(probs, one, {}), ArgumentError);
}

TEST_CASE("Dice loss") {
  oracle::Rng rng(137);
  for (int trial = 0; trial < 20; ++trial) {
    const int h = oracle::uniform_int(rng, 2, 10), w = oracle::uniform_int(rng, 2, 10);
    Eigen::MatrixXd g = (random_matrix(rng, h, w).array() > 0).cast<double>();
    g(0, 0) = 1.0;
    const double area = g.sum();
    CHECK(loss_dice(g, g).value <= 1.0 / (2 * area + 1));

    // disjoint full-confidence masks of equal area
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, h * w), b = a;
    a.row(0).setOnes();
    b.row(1).setOnes();
    CHECK(std::abs(loss_dice(a, b).value - (1.0 - 1.0 / (2.0 * h * w + 1))) < 1e-12);

    // interpolating from the complement toward gt never increases the loss
    const Eigen::MatrixXd start = (1.0 - g.array()).matrix();
    double prev = loss_dice(start, g).value;
    for (int k = 1; k <= 20; ++k) {
      const double t = k / 20.0;
      const double cur = loss_dice(((1 - t) * start + t * g).eval(), g).value;
      CHECK(cur <= prev);
      prev = cur;
    }
  }
}

TEST_CASE("binary cross-entropy and confidence losses") {
  const Eigen::MatrixXd half = Eigen::MatrixXd::Constant(4, 5, 0.5);
  const Eigen::MatrixXd g = (Eigen::MatrixXd(4, 5) << Eigen::MatrixXd::Ones(2, 5), Eigen::MatrixXd::Zero(2, 5)).finished();
  CHECK(std::abs(loss_bce(half, g).value - std::log(2.0)) < 1e-15);
  const auto exact = loss_bce(g, g);
  CHECK(exact.value < 1e-11);
  CHECK(exact.clamped);

  oracle::Rng rng(139);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd p = random_matrix(rng, 3, 7, 0.01, 0.99);
    const Eigen::MatrixXd t = (random_matrix(rng, 3, 7).array() > 0).cast<double>();
    double ref = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const double pi = p.data()[i], ti = t.data()[i];
      ref += -(ti * std::log(pi) + (1 - ti) * std::log(1 - pi));
    }
    CHECK(std::abs(loss_bce(p, t).value - ref / 21.0) < 1e-12);

    const Eigen::VectorXd conf = random_matrix(rng, 16, 1, 0.01, 0.99);
    const Eigen::VectorXd pres = (random_matrix(rng, 16, 1).array() > 0).cast<double>();
    CHECK(loss_conf(conf, pres).value == loss_bce(conf, pres).value);
  }
  CHECK(std::abs(loss_conf(Eigen::VectorXd::Constant(16, 0.5), Eigen::VectorXd::Ones(16)).value - std::log(2.0)) < 1e-15);
  CHECK(loss_conf(Eigen::VectorXd::Ones(16), Eigen::VectorXd::Ones(16)).value < 1e-11);
  CHECK_THROWS_AS(loss_conf(Eigen::VectorXd::Ones(15), Eigen::VectorXd::Ones(15)), ArgumentError);
  CHECK_THROWS_AS(loss_bce(half, Eigen::MatrixXd::Zero(2, 2)), ArgumentError);
}

TEST_CASE("multi-class cross-entropy") {
  oracle::Rng rng(149);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = oracle::uniform_int(rng, 1, 30);
    const Eigen::MatrixXd logits = random_matrix(rng, kLossClasses, n, -6, 6);
    Eigen::VectorXi gt(n);
    for (int j = 0; j < n; ++j) gt[j] = oracle::uniform_int(rng, 0, 16);
    double ref = 0.0;
    for (int j = 0; j < n; ++j) {
      double z = 0.0;
      for (int c = 0; c < kLossClasses; ++c) z += std::exp(logits(c, j));
      ref -= std::log(std::exp(logits(gt[j], j)) / z);
    }
    CHECK(std::abs(loss_ce(logits, gt).value - ref / n) < 1e-12);
  }
  CHECK_THROWS_AS(loss_ce(Eigen::MatrixXd::Zero(16, 2), Eigen::VectorXi::Zero(2)), ArgumentError);
  CHECK_THROWS_AS(loss_ce(Eigen::MatrixXd::Zero(17, 2), Eigen::VectorXi::Constant(2, 17)), ArgumentError);
}

TEST_CASE("Sobel boundary loss") {
  oracle::Rng rng(151);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd p = random_matrix(rng, 8, 8, 0, 1);
    const Eigen::MatrixXd g = (random_matrix(rng, 8, 8).array() > 0).cast<double>();
    CHECK(std::abs(loss_boundary(p, g).value - oracle::sobel_loss_ref(p, g)) < 1e-12);
    CHECK(loss_boundary(p, p).value == 0.0);
    const double a = oracle::uniform(rng, -3, 3), b = oracle::uniform(rng, -3, 3);
    CHECK(std::abs(loss_boundary(Eigen::MatrixXd::Constant(5, 6, a), Eigen::MatrixXd::Constant(5, 6, b)).value) < 1e-12);
  }
  CHECK_THROWS_AS(loss_boundary(Eigen::MatrixXd::Zero(2, 5), Eigen::MatrixXd::Zero(2, 5)), ArgumentError);
  CHECK_THROWS_AS(loss_boundary(Eigen::MatrixXd::Zero(4, 4), Eigen::MatrixXd::Zero(4, 5)), ArgumentError);
}

TEST_CASE("total loss") {
  LossComponents unit{1, 1, 1, 1, 1, 1, 1};
  CHECK(loss_total(unit) == 10.0);
  CHECK(loss_total(LossComponents{}) == 0.0);
  const LossWeights def;
  CHECK(def.mc == 1.0);
  CHECK(def.peg == 1.0);
  CHECK(def.mr == 2.0);

  oracle::Rng rng(157);
  for (int trial = 0; trial < 20; ++trial) {
    LossComponents c{oracle::uniform(rng), oracle::uniform(rng), oracle::uniform(rng), oracle::uniform(rng),
                     oracle::uniform(rng), oracle::uniform(rng), oracle::uniform(rng)};
    LossWeights w{oracle::uniform(rng), oracle::uniform(rng), oracle::uniform(rng), oracle::uniform(rng), oracle::uniform(rng),
                  oracle::uniform(rng), oracle::uniform(rng), oracle::uniform(rng), oracle::uniform(rng)};
    const double base = loss_total(c, w);
    // linear in each top-level weight
    LossWeights w2 = w;
    w2.mr *= 3.0;
    CHECK(loss_total(c, w2) - base == doctest::Approx(2.0 * w.mr * loss_mr(c, w)));
    // doubling the top-level weights doubles the total
    LossWeights top = w;
    top.mc *= 2;
    top.peg *= 2;
    top.mr *= 2;
    CHECK(loss_total(c, top) == doctest::Approx(2.0 * base));
    CHECK(base >= 0.0);
  }
  LossWeights neg;
  neg.ce = -1;
  CHECK_THROWS_AS(loss_total(unit, neg), ArgumentError);
  unit.ce = std::nan("");
  CHECK_THROWS_AS(loss_total(unit), NumericError);
}

TEST_CASE("gradient-check suite") {
  const auto ops = gradcheck_operations();
  const auto entries = run_gradcheck_suite();
  REQUIRE(entries.size() == ops.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    CHECK(entries[i].name == ops[i]);
    CHECK(entries[i].passed());
    CHECK(entries[i].coordinates > 0);
  }
  GradCheckOptions faulty;
  faulty.faults = {ops.front()};
  const auto bad = run_gradcheck_suite(faulty);
  CHECK_FALSE(bad.front().passed());
  CHECK(bad.front().max_relative_error == doctest::Approx(0.5).epsilon(1e-3));
  for (std::size_t i = 1; i < bad.size(); ++i) CHECK(bad[i].passed());
  const nlohmann::json report = gradcheck_report(entries);
  CHECK(report.dump().find(ops.back()) != std::string::npos);
}
