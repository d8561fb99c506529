#include "toothlift/neural/grad_check.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <random>

#include "toothlift/hungarian.hpp"
#include "toothlift/neural/dgap.hpp"
#include "toothlift/neural/losses.hpp"

namespace toothlift::neural {
namespace {

using Vec = Vector<double>;
using Mat = Matrix<double>;

struct Operation {
  std::string name;
  Vec point;
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
};

Mat uniform(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

Mat binary(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::bernoulli_distribution coin(0.5);
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = coin(rng) ? 1.0 : 0.0;
  return m;
}

Vec flat(const Mat& m) { return m.reshaped(); }
Mat shaped(const Vec& v, Eigen::Index rows, Eigen::Index cols) { return v.reshaped(rows, cols); }

// Splits a concatenated point into consecutive blocks of the given shapes.
struct Layout {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> shapes;

  Eigen::Index size() const {
    Eigen::Index n = 0;
    for (const auto& [r, c] : shapes) n += r * c;
    return n;
  }
  Mat block(const Vec& v, std::size_t i) const {
    Eigen::Index at = 0;
    for (std::size_t k = 0; k < i; ++k) at += shapes[k].first * shapes[k].second;
    return v.segment(at, shapes[i].first * shapes[i].second).reshaped(shapes[i].first, shapes[i].second);
  }
  Vec join(const std::vector<Mat>& blocks) const {
    Vec out(size());
    Eigen::Index at = 0;
    for (const auto& b : blocks) {
      out.segment(at, b.size()) = b.reshaped();
      at += b.size();
    }
    return out;
  }
};

std::vector<Operation> build_operations(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Operation> ops;

  // DGAP on a 3-channel 7x6 map with a stride-2 grid; the scalar objective is
  // a random weighting of the output.
  const int channels = 3, hidden = 4, h = 7, w = 6;
  const FeatureMap<double> input(h, w, uniform(rng, channels, h * w, -1.0, 1.0));
  auto params = DgapParams<double>::random(channels, hidden, 2, 0.5, rng);
  const Mat weights = uniform(rng, channels, h * w, -1.0, 1.0);
  const auto objective = [weights](const FeatureMap<double>& out) { return out.data.cwiseProduct(weights).sum(); };
  const auto dgap_grads = [=](const DgapParams<double>& p, const FeatureMap<double>& x) {
    DgapCache<double> cache;
    dgap_forward(x, p, &cache);
    return dgap_backward(x, p, cache, weights);
  };
  const auto offset_size = params.w1.size() + params.b1.size() + params.w2.size() + params.b2.size();
  ops.push_back({"dgap_forward/offset_net", params.flatten().head(offset_size),
                 [=](const Vec& v) {
                   Vec all = params.flatten();
                   all.head(offset_size) = v;
                   return objective(dgap_forward(input, params.unflatten(all)));
                 },
                 [=](const Vec& v) {
                   Vec all = params.flatten();
                   all.head(offset_size) = v;
                   return Vec(dgap_grads(params.unflatten(all), input).params.flatten().head(offset_size));
                 }});
  const auto proj_size = params.size() - offset_size;
  ops.push_back({"dgap_forward/projections", params.flatten().tail(proj_size),
                 [=](const Vec& v) {
                   Vec all = params.flatten();
                   all.tail(proj_size) = v;
                   return objective(dgap_forward(input, params.unflatten(all)));
                 },
                 [=](const Vec& v) {
                   Vec all = params.flatten();
                   all.tail(proj_size) = v;
                   return Vec(dgap_grads(params.unflatten(all), input).params.flatten().tail(proj_size));
                 }});
  ops.push_back({"dgap_forward/input", flat(input.data),
                 [=](const Vec& v) { return objective(dgap_forward(FeatureMap<double>(h, w, shaped(v, channels, h * w)), params)); },
                 [=](const Vec& v) { return flat(dgap_grads(params, FeatureMap<double>(h, w, shaped(v, channels, h * w))).input); }});

  // Matched classification: 5 predicted instances against 4 ground-truth teeth.
  Mat logits = uniform(rng, 5, kLossClasses, -2.0, 2.0);
  Mat probs = logits.array().exp().matrix();
  probs.array().colwise() /= probs.rowwise().sum().array();
  std::vector<int> gt_classes = {3, 7, 11, 16};
  Mat cost(probs.rows(), static_cast<Eigen::Index>(gt_classes.size()));
  for (Eigen::Index i = 0; i < cost.rows(); ++i) {
    for (Eigen::Index j = 0; j < cost.cols(); ++j) cost(i, j) = -probs(i, gt_classes[static_cast<std::size_t>(j)]);
  }
  const AssignmentResult assignment = hungarian(cost);
  const auto np = probs.rows();
  ops.push_back({"loss_mc", flat(probs),
                 [=](const Vec& v) { return loss_mc(shaped(v, np, kLossClasses), assignment, gt_classes).value; },
                 [=](const Vec& v) { return flat(loss_mc(shaped(v, np, kLossClasses), assignment, gt_classes).grad); }});

  const Mat mask = uniform(rng, 6, 5, 0.05, 0.95), mask_gt = binary(rng, 6, 5);
  ops.push_back({"loss_bce", flat(mask), [=](const Vec& v) { return loss_bce(shaped(v, 6, 5), mask_gt).value; },
                 [=](const Vec& v) { return flat(loss_bce(shaped(v, 6, 5), mask_gt).grad); }});
  ops.push_back({"loss_dice", flat(mask), [=](const Vec& v) { return loss_dice(shaped(v, 6, 5), mask_gt).value; },
                 [=](const Vec& v) { return flat(loss_dice(shaped(v, 6, 5), mask_gt).grad); }});

  const Mat conf = uniform(rng, kLossTeeth, 1, 0.05, 0.95), presence = binary(rng, kLossTeeth, 1);
  ops.push_back({"loss_conf", flat(conf), [=](const Vec& v) { return loss_conf(v, presence).value; },
                 [=](const Vec& v) { return flat(loss_conf(v, presence).grad); }});

  const Mat pixel_logits = uniform(rng, kLossClasses, 10, -3.0, 3.0);
  Eigen::VectorXi pixel_gt(10);
  std::uniform_int_distribution<int> cls(0, kLossClasses - 1);
  for (Eigen::Index i = 0; i < pixel_gt.size(); ++i) pixel_gt[i] = cls(rng);
  ops.push_back({"loss_ce", flat(pixel_logits),
                 [=](const Vec& v) { return loss_ce(shaped(v, kLossClasses, 10), pixel_gt).value; },
                 [=](const Vec& v) { return flat(loss_ce(shaped(v, kLossClasses, 10), pixel_gt).grad); }});

  // The Sobel loss is piecewise linear with integer tap weights, so signs can
  // cancel to an exactly-zero derivative; differences of O(1) values cannot
  // resolve that below the 1e-8 floor. Redraw until every coordinate is live.
  const Mat refined_gt = binary(rng, 6, 7);
  Mat refined = uniform(rng, 6, 7, 0.0, 1.0);
  while ((loss_boundary(refined, refined_gt).grad.array() == 0.0).any()) refined = uniform(rng, 6, 7, 0.0, 1.0);
  ops.push_back({"loss_boundary", flat(refined),
                 [=](const Vec& v) { return loss_boundary(shaped(v, 6, 7), refined_gt).value; },
                 [=](const Vec& v) { return flat(loss_boundary(shaped(v, 6, 7), refined_gt).grad); }});

  // Composite objectives over the concatenated predictions.
  const LossWeights lw;
  const Layout peg{{{6, 5}, {kLossTeeth, 1}}};
  ops.push_back({"loss_peg", peg.join({mask, conf}),
                 [=](const Vec& v) {
                   const Mat m = peg.block(v, 0), c = peg.block(v, 1);
                   LossComponents lc;
                   lc.bce = loss_bce(m, mask_gt).value;
                   lc.dice = loss_dice(m, mask_gt).value;
                   lc.conf = loss_conf(c, presence).value;
                   return loss_peg(lc, lw);
                 },
                 [=](const Vec& v) {
                   const Mat m = peg.block(v, 0), c = peg.block(v, 1);
                   return peg.join({lw.bce * loss_bce(m, mask_gt).grad + lw.dice * loss_dice(m, mask_gt).grad,
                                    lw.conf * loss_conf(c, presence).grad});
                 }});
  const Layout mr{{{kLossClasses, 10}, {6, 7}}};
  ops.push_back({"loss_mr", mr.join({pixel_logits, refined}),
                 [=](const Vec& v) {
                   const Mat l = mr.block(v, 0), m = mr.block(v, 1);
                   LossComponents lc;
                   lc.ce = loss_ce(l, pixel_gt).value;
                   lc.dice_mr = loss_dice(m, refined_gt).value;
                   lc.boundary = loss_boundary(m, refined_gt).value;
                   return loss_mr(lc, lw);
                 },
                 [=](const Vec& v) {
                   const Mat l = mr.block(v, 0), m = mr.block(v, 1);
                   return mr.join({lw.ce * loss_ce(l, pixel_gt).grad,
                                   lw.dice_mr * loss_dice(m, refined_gt).grad +
                                       lw.boundary * loss_boundary(m, refined_gt).grad});
                 }});
  const Layout all{{{np, kLossClasses}, {6, 5}, {kLossTeeth, 1}, {kLossClasses, 10}, {6, 7}}};
  ops.push_back({"loss_total", all.join({probs, mask, conf, pixel_logits, refined}),
                 [=](const Vec& v) {
                   LossComponents lc;
                   lc.mc = loss_mc(all.block(v, 0), assignment, gt_classes).value;
                   lc.bce = loss_bce(all.block(v, 1), mask_gt).value;
                   lc.dice = loss_dice(all.block(v, 1), mask_gt).value;
                   lc.conf = loss_conf(all.block(v, 2), presence).value;
                   lc.ce = loss_ce(all.block(v, 3), pixel_gt).value;
                   lc.dice_mr = loss_dice(all.block(v, 4), refined_gt).value;
                   lc.boundary = loss_boundary(all.block(v, 4), refined_gt).value;
                   return loss_total(lc, lw);
                 },
                 [=](const Vec& v) {
                   const Mat m = all.block(v, 1), r = all.block(v, 4);
                   return all.join(
                       {lw.mc * loss_mc(all.block(v, 0), assignment, gt_classes).grad,
                        lw.peg * (lw.bce * loss_bce(m, mask_gt).grad + lw.dice * loss_dice(m, mask_gt).grad),
                        lw.peg * lw.conf * loss_conf(all.block(v, 2), presence).grad,
                        lw.mr * lw.ce * loss_ce(all.block(v, 3), pixel_gt).grad,
                        lw.mr * (lw.dice_mr * loss_dice(r, refined_gt).grad +
                                 lw.boundary * loss_boundary(r, refined_gt).grad)});
                 }});
  return ops;
}

}  // namespace

std::vector<std::string> gradcheck_operations() {
  std::vector<std::string> names;
  for (const auto& op : build_operations(0)) names.push_back(op.name);
  return names;
}

std::vector<GradCheckEntry> run_gradcheck_suite(const GradCheckOptions& options) {
  const auto ops = build_operations(options.seed);
  for (const auto& f : options.faults) {
    if (std::none_of(ops.begin(), ops.end(), [&](const Operation& op) { return op.name == f; })) {
      throw ArgumentError("unknown operation for fault injection: " + f);
    }
  }
  std::vector<GradCheckEntry> out;
  for (const auto& op : ops) {
    Vec analytic = op.gradient(op.point);
    if (std::find(options.faults.begin(), options.faults.end(), op.name) != options.faults.end()) analytic *= 2.0;
    const auto r = grad_check<double>(op.value, analytic, op.point, options.eps);
    out.push_back({op.name, r.max_relative_error, op.point.size()});
  }
  return out;
}

nlohmann::json gradcheck_report(const std::vector<GradCheckEntry>& entries) {
  nlohmann::json j;
  j["tolerance"] = kGradCheckTolerance;
  j["passed"] = std::all_of(entries.begin(), entries.end(), [](const GradCheckEntry& e) { return e.passed(); });
  auto& ops = j["operations"] = nlohmann::json::array();
  for (const auto& e : entries) {
    ops.push_back({{"name", e.name},
                   {"max_relative_error", e.max_relative_error},
                   {"coordinates", e.coordinates},
                   {"passed", e.passed()}});
  }
  return j;
}

}  // namespace toothlift::neural
