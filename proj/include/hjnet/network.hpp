#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hjnet/core.hpp"

namespace hjnet {

using Point = Eigen::Vector2d;

struct Vertex {
  std::string id;
  Point coords = Point::Zero();
  std::optional<std::string> label;
};

/// Input description of an oriented arc. `points` may be empty, in which case
/// the arc is the straight segment origin -> terminus. When given, it must
/// start at the origin coordinates and end at the terminus coordinates.
/// `length`, when given, is checked against the polyline length.
struct ArcSpec {
  std::string id;
  std::string origin;
  std::string terminus;
  std::vector<Point> points;
  std::optional<double> length;
};

/// Oriented arc parametrized by arc length on [0, length].
struct Arc {
  std::string id;
  std::size_t origin = 0;
  std::size_t terminus = 0;
  double length = 0.0;
  std::vector<Point> geometry;      // polyline, at least two points
  std::vector<double> cumulative;   // arc length at each polyline point

  bool is_segment() const { return geometry.size() == 2; }
};

/// One entry of E+_x: an arc touching the vertex and the parameter at which
/// it does (0 at the origin, length at the terminus).
struct Incidence {
  std::size_t arc = 0;
  double parameter = 0.0;
  bool at_origin = true;
};

class Network {
 public:
  /// Validates and builds the network. Throws Error with SelfLoop,
  /// Disconnected, LengthMismatch, DanglingReference or InvalidArgument.
  static Network build(std::vector<Vertex> vertices, const std::vector<ArcSpec>& arcs);

  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_arcs() const { return arcs_.size(); }

  const std::vector<Vertex>& vertices() const { return vertices_; }
  const std::vector<Arc>& arcs() const { return arcs_; }
  const Vertex& vertex(std::size_t i) const { return vertices_.at(i); }
  const Arc& arc(std::size_t i) const { return arcs_.at(i); }

  std::size_t vertex_index(const std::string& id) const;
  std::size_t arc_index(const std::string& id) const;

  const std::vector<Incidence>& incidence(std::size_t vertex) const {
    return incidence_.at(vertex);
  }

  double min_arc_length() const;
  double total_length() const;

  /// Non-fatal findings from validation (e.g. unchecked polyline crossings).
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  std::vector<Vertex> vertices_;
  std::vector<Arc> arcs_;
  std::vector<std::vector<Incidence>> incidence_;
  std::vector<std::string> warnings_;
};

/// gamma(s): point at arc length s from the origin. Throws OutOfRange.
Point arc_point(const Arc& arc, double s);
Point arc_point(const Network& network, std::size_t arc, double s);

/// Parameter on the reversed arc that names the same physical point.
double reversed_parameter(const Arc& arc, double s);

}  // namespace hjnet
