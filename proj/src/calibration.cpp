#include "augat/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace augat {

std::vector<double> nominal_hardness_degrees(double baseRobustness, const std::vector<double>& targets) {
  std::vector<double> out;
  out.reserve(targets.size());
  for (double t : targets) {
    if (t <= 0.0) throw std::invalid_argument("nominal_hardness_degrees: target must be positive");
    // Round to 1e-9 first so exact quotients such as 2.00 do not truncate to 1.99.
    const double ratio = std::round(baseRobustness / t * 1e9) / 1e9;
    out.push_back(std::floor(ratio * 100.0 + 1e-9) / 100.0);
  }
  return out;
}

void HardnessCalibration::validate() const {
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i].degree < 1 || levels[i].degree > 7)
      throw std::invalid_argument("calibration: degree outside 1..7");
    if (i > 0 && levels[i].degree <= levels[i - 1].degree)
      throw std::invalid_argument("calibration: degrees must be strictly increasing");
    if (i > 0 && levels[i].hardness <= levels[i - 1].hardness)
      throw std::invalid_argument("calibration: hardness must be strictly increasing");
  }
}

const CalibrationLevel* HardnessCalibration::find(int degree) const {
  for (const auto& l : levels)
    if (l.degree == degree) return &l;
  return nullptr;
}

void CalibrationTable::set(TransformKind kind, CalibrationLevel level) {
  auto& cal = entries_[kind];
  cal.kind = kind;
  auto it = std::find_if(cal.levels.begin(), cal.levels.end(), [&](const auto& l) { return l.degree == level.degree; });
  if (it != cal.levels.end())
    *it = level;
  else
    cal.levels.push_back(level);
  std::sort(cal.levels.begin(), cal.levels.end(), [](const auto& a, const auto& b) { return a.degree < b.degree; });
  cal.validate();
}

const HardnessCalibration& CalibrationTable::at(TransformKind kind) const {
  auto it = entries_.find(kind);
  if (it == entries_.end()) throw std::out_of_range("no calibration for " + std::string(to_string(kind)));
  return it->second;
}

CalibrationTable CalibrationTable::parse(std::istream& in) {
  CalibrationTable table;
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fail = [&](const std::string& why) {
      throw std::invalid_argument("calibration line " + std::to_string(lineNo) + ": " + why);
    };
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected '<Kind>.<degree> = <strength>'");
    std::string key = line.substr(0, eq);
    key.erase(std::remove_if(key.begin(), key.end(), [](char c) { return c == ' ' || c == '\t'; }), key.end());
    const auto dot = key.find('.');
    if (dot == std::string::npos) fail("key must be <Kind>.<degree>");
    const TransformKind kind = parse_transform_kind(key.substr(0, dot));
    CalibrationLevel level;
    try {
      level.degree = std::stoi(key.substr(dot + 1));
    } catch (const std::exception&) {
      fail("bad degree");
    }
    if (level.degree < 1 || level.degree > 7) fail("degree outside 1..7");
    level.hardness = kHardnessDegrees[static_cast<std::size_t>(level.degree - 1)];

    std::istringstream rest(line.substr(eq + 1));
    if (!(rest >> level.strength)) fail("missing strength");
    std::string field;
    while (rest >> field) {
      const auto feq = field.find('=');
      if (feq == std::string::npos) fail("bad field '" + field + "'");
      const std::string name = field.substr(0, feq);
      const double value = std::stod(field.substr(feq + 1));
      if (name == "hardness")
        level.hardness = value;
      else if (name == "achieved")
        level.achievedRobustness = value;
      else
        fail("unknown field '" + name + "'");
    }
    table.set(kind, level);
  }
  return table;
}

CalibrationTable CalibrationTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open calibration file " + path);
  return parse(in);
}

void CalibrationTable::write(std::ostream& out) const {
  out << std::setprecision(17);
  for (const auto& [kind, cal] : entries_)
    for (const auto& l : cal.levels) {
      out << to_string(kind) << '.' << l.degree << " = " << l.strength << " hardness=" << l.hardness;
      if (l.achievedRobustness) out << " achieved=" << *l.achievedRobustness;
      out << '\n';
    }
}

TransformSpec calibrated_spec(TransformKind kind, int degree, const HardnessCalibration& calibration) {
  if (degree < 1 || degree > 7) throw std::out_of_range("hardness degree must be in 1..7");
  const CalibrationLevel* level = calibration.find(degree);
  if (!level)
    throw std::out_of_range(std::string(to_string(kind)) + ": degree " + std::to_string(degree) + " not calibrated");
  TransformSpec spec;
  spec.kind = kind;
  spec.strength = level->strength;
  return spec;
}

StrengthSearchResult search_strength(const std::function<double(double)>& robustnessAt, double lo, double hi,
                                     double target, double tolerance, int maxIterations, bool integral) {
  StrengthSearchResult res;
  res.target = target;
  if (integral) {
    lo = std::ceil(lo);
    hi = std::floor(hi);
  }
  if (!(lo <= hi)) throw std::invalid_argument("search_strength: empty strength interval");

  const double rLo = robustnessAt(lo);
  const double rHi = robustnessAt(hi);
  auto consider = [&](double s, double r) {
    if (std::abs(r - target) < std::abs(res.achieved - target)) {
      res.strength = s;
      res.achieved = r;
    }
    res.reachable = std::abs(res.achieved - target) <= tolerance;
  };
  res.strength = lo;
  res.achieved = rLo;
  res.reachable = std::abs(rLo - target) <= tolerance;
  consider(hi, rHi);
  if (res.reachable) return res;
  if (target < std::min(rLo, rHi) - tolerance || target > std::max(rLo, rHi) + tolerance) return res;

  const bool decreasing = rLo >= rHi;
  while (res.iterations < maxIterations) {
    double mid = 0.5 * (lo + hi);
    if (integral) {
      if (hi - lo <= 1.0) break;
      mid = std::floor(mid);
    }
    const double r = robustnessAt(mid);
    ++res.iterations;
    consider(mid, r);
    if (res.reachable) break;
    const bool needStronger = decreasing ? (r > target) : (r < target);
    (needStronger ? lo : hi) = mid;
  }
  return res;
}

}  // namespace augat
