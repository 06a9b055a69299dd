#include "hjnet/network.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <set>
#include <sstream>

namespace hjnet {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::SelfLoop: return "SelfLoop";
    case ErrorCode::Disconnected: return "Disconnected";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::DanglingReference: return "DanglingReference";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::EmptyGrid: return "EmptyGrid";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::NonMonotoneAbscissae: return "NonMonotoneAbscissae";
    case ErrorCode::SuperlinearityScanFailed: return "SuperlinearityScanFailed";
    case ErrorCode::NonConvexSlice: return "NonConvexSlice";
    case ErrorCode::ScanFailed: return "ScanFailed";
    case ErrorCode::StepTooLarge: return "StepTooLarge";
    case ErrorCode::EmptyControlInterval: return "EmptyControlInterval";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::NotArcBranch: return "NotArcBranch";
    case ErrorCode::ReferenceUndefined: return "ReferenceUndefined";
    case ErrorCode::OutsideValidityWindow: return "OutsideValidityWindow";
    case ErrorCode::TooFewNodes: return "TooFewNodes";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Inadmissible: return "Inadmissible";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
  }
  return "Unknown";
}

namespace {

constexpr double kLengthRelTol = 1e-12;

double cross(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

// Closed segments [p0,p1] and [q0,q1] share a point other than a common
// endpoint listed in `shared`.
bool segments_touch_outside(const Point& p0, const Point& p1, const Point& q0, const Point& q1,
                            const std::vector<Point>& shared) {
  const Point r = p1 - p0;
  const Point q = q1 - q0;
  const double denom = cross(r, q);
  const Point d = q0 - p0;
  auto is_shared = [&](const Point& x) {
    return std::any_of(shared.begin(), shared.end(), [&](const Point& y) { return x == y; });
  };
  if (denom == 0.0) {
    if (cross(d, r) != 0.0) return false;  // parallel, disjoint lines
    // Collinear: project q onto r and check overlap length.
    const double rr = r.squaredNorm();
    double t0 = d.dot(r) / rr;
    double t1 = (q1 - p0).dot(r) / rr;
    if (t0 > t1) std::swap(t0, t1);
    const double lo = std::max(0.0, t0);
    const double hi = std::min(1.0, t1);
    if (lo > hi) return false;
    if (lo < hi) return true;  // overlapping stretch
    return !is_shared(p0 + lo * r);
  }
  const double t = cross(d, q) / denom;
  const double u = cross(d, r) / denom;
  if (t < 0.0 || t > 1.0 || u < 0.0 || u > 1.0) return false;
  const Point x = p0 + t * r;
  if ((t == 0.0 || t == 1.0) && (u == 0.0 || u == 1.0)) {
    return !is_shared(x);
  }
  return true;
}

}  // namespace

Network Network::build(std::vector<Vertex> vertices, const std::vector<ArcSpec>& arcs) {
  if (vertices.empty()) throw Error(ErrorCode::InvalidArgument, "network has no vertices");
  if (arcs.empty()) throw Error(ErrorCode::InvalidArgument, "network has no arcs");

  Network net;
  std::map<std::string, std::size_t> vindex;
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    if (!vindex.emplace(vertices[i].id, i).second)
      throw Error(ErrorCode::InvalidArgument, "duplicate vertex id '" + vertices[i].id + "'");
  }
  net.vertices_ = std::move(vertices);
  net.incidence_.resize(net.vertices_.size());

  std::set<std::string> arc_ids;
  std::set<std::pair<std::size_t, std::size_t>> pairs;
  for (const ArcSpec& spec : arcs) {
    if (!arc_ids.insert(spec.id).second)
      throw Error(ErrorCode::InvalidArgument, "duplicate arc id '" + spec.id + "'");
    auto o = vindex.find(spec.origin);
    auto t = vindex.find(spec.terminus);
    if (o == vindex.end() || t == vindex.end())
      throw Error(ErrorCode::DanglingReference, "arc '" + spec.id + "' references an unknown vertex");
    if (o->second == t->second)
      throw Error(ErrorCode::SelfLoop, "arc '" + spec.id + "'");

    Arc arc;
    arc.id = spec.id;
    arc.origin = o->second;
    arc.terminus = t->second;
    const Point& po = net.vertices_[arc.origin].coords;
    const Point& pt = net.vertices_[arc.terminus].coords;
    if (spec.points.empty()) {
      arc.geometry = {po, pt};
    } else {
      if (spec.points.size() < 2 || spec.points.front() != po || spec.points.back() != pt)
        throw Error(ErrorCode::LengthMismatch,
                    "arc '" + spec.id + "' polyline must run from origin to terminus coordinates");
      arc.geometry = spec.points;
    }
    arc.cumulative.assign(arc.geometry.size(), 0.0);
    for (std::size_t k = 1; k < arc.geometry.size(); ++k) {
      const double piece = (arc.geometry[k] - arc.geometry[k - 1]).norm();
      if (piece == 0.0)
        throw Error(ErrorCode::LengthMismatch, "arc '" + spec.id + "' has a zero-length piece");
      arc.cumulative[k] = arc.cumulative[k - 1] + piece;
    }
    arc.length = arc.cumulative.back();
    if (spec.length &&
        std::abs(*spec.length - arc.length) > kLengthRelTol * std::max(1.0, arc.length))
      throw Error(ErrorCode::LengthMismatch, "arc '" + spec.id + "' declared length differs from geometry");

    auto key = std::minmax(arc.origin, arc.terminus);
    if (!pairs.insert(key).second && arc.is_segment()) {
      throw Error(ErrorCode::InvalidArgument,
                  "arc '" + spec.id + "' duplicates the support of another segment");
    }

    const std::size_t idx = net.arcs_.size();
    net.incidence_[arc.origin].push_back({idx, 0.0, true});
    net.incidence_[arc.terminus].push_back({idx, arc.length, false});
    net.arcs_.push_back(std::move(arc));
  }

  // Arcs may meet only at shared vertices.
  for (std::size_t a = 0; a < net.arcs_.size(); ++a) {
    for (std::size_t b = a + 1; b < net.arcs_.size(); ++b) {
      const Arc& A = net.arcs_[a];
      const Arc& B = net.arcs_[b];
      if (!A.is_segment() || !B.is_segment()) continue;
      std::vector<Point> shared;
      for (std::size_t va : {A.origin, A.terminus})
        for (std::size_t vb : {B.origin, B.terminus})
          if (va == vb) shared.push_back(net.vertices_[va].coords);
      if (segments_touch_outside(A.geometry[0], A.geometry[1], B.geometry[0], B.geometry[1], shared))
        throw Error(ErrorCode::InvalidArgument,
                    "arcs '" + A.id + "' and '" + B.id + "' intersect away from a shared vertex");
    }
    if (!net.arcs_[a].is_segment())
      net.warnings_.push_back("arc '" + net.arcs_[a].id +
                              "' is a polyline; intersections with other arcs are not checked");
  }

  // Connectivity by BFS from vertex 0.
  std::vector<bool> seen(net.vertices_.size(), false);
  std::queue<std::size_t> todo;
  todo.push(0);
  seen[0] = true;
  while (!todo.empty()) {
    const std::size_t v = todo.front();
    todo.pop();
    for (const Incidence& inc : net.incidence_[v]) {
      const Arc& arc = net.arcs_[inc.arc];
      const std::size_t other = inc.at_origin ? arc.terminus : arc.origin;
      if (!seen[other]) {
        seen[other] = true;
        todo.push(other);
      }
    }
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
    std::ostringstream os;
    os << "reachable {";
    for (std::size_t i = 0; i < seen.size(); ++i)
      if (seen[i]) os << ' ' << net.vertices_[i].id;
    os << " } unreachable {";
    for (std::size_t i = 0; i < seen.size(); ++i)
      if (!seen[i]) os << ' ' << net.vertices_[i].id;
    os << " }";
    throw Error(ErrorCode::Disconnected, os.str());
  }
  return net;
}

std::size_t Network::vertex_index(const std::string& id) const {
  for (std::size_t i = 0; i < vertices_.size(); ++i)
    if (vertices_[i].id == id) return i;
  throw Error(ErrorCode::DanglingReference, "unknown vertex '" + id + "'");
}

std::size_t Network::arc_index(const std::string& id) const {
  for (std::size_t i = 0; i < arcs_.size(); ++i)
    if (arcs_[i].id == id) return i;
  throw Error(ErrorCode::DanglingReference, "unknown arc '" + id + "'");
}

double Network::min_arc_length() const {
  double m = std::numeric_limits<double>::infinity();
  for (const Arc& a : arcs_) m = std::min(m, a.length);
  return m;
}

double Network::total_length() const {
  double sum = 0.0;
  for (const Arc& a : arcs_) sum += a.length;
  return sum;
}

Point arc_point(const Arc& arc, double s) {
  if (!(s >= 0.0 && s <= arc.length))
    throw Error(ErrorCode::OutOfRange, "s outside [0, |" + arc.id + "|]");
  if (s == arc.length) return arc.geometry.back();
  auto it = std::upper_bound(arc.cumulative.begin(), arc.cumulative.end(), s);
  const std::size_t k = static_cast<std::size_t>(it - arc.cumulative.begin()) - 1;
  const double piece = arc.cumulative[k + 1] - arc.cumulative[k];
  const double t = (s - arc.cumulative[k]) / piece;
  return (1.0 - t) * arc.geometry[k] + t * arc.geometry[k + 1];
}

Point arc_point(const Network& network, std::size_t arc, double s) {
  return arc_point(network.arc(arc), s);
}

double reversed_parameter(const Arc& arc, double s) {
  if (!(s >= 0.0 && s <= arc.length))
    throw Error(ErrorCode::OutOfRange, "s outside [0, |" + arc.id + "|]");
  return arc.length - s;
}

}  // namespace hjnet
