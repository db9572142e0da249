#include "mscap/io.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "mscap/error.hpp"

namespace mscap {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write '" + path + "'");
  return out;
}

void header(std::ofstream& out, const GridDomain& g, const std::string& extra) {
  const Point lo = g.bbox_lo(), hi = g.bbox_hi();
  out << "# n=" << g.n() << " h=" << format_double(g.h()) << " bbox=";
  for (int a = 0; a < g.dim(); ++a)
    out << (a ? ";" : "") << '[' << format_double(lo[a]) << ',' << format_double(hi[a]) << ']';
  out << extra << '\n';
  static const char* names[] = {"x1", "y1", "x2", "y2"};
  for (int a = 0; a < g.dim(); ++a) out << names[a] << ',';
  out << "class";
}

void coords(std::ofstream& out, const GridDomain& g, std::size_t i) {
  const Point x = g.coords(i);
  for (int a = 0; a < g.dim(); ++a) out << format_double(x[a]) << ',';
  out << to_string(g.cls(i));
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

void write_field_csv(const std::string& path, const ScalarField& f, const std::string& column) {
  const GridDomain& g = f.grid();
  auto out = open_out(path);
  header(out, g, "");
  out << ',' << column << '\n';
  for (std::size_t i = 0; i < g.size(); ++i) {
    coords(out, g, i);
    out << ',' << format_double(f[i]) << '\n';
  }
  if (!out) throw Error(ErrorCode::kIoError, "write failed for '" + path + "'");
}

void write_envelope_csv(const std::string& path, const EnvelopeSolution& sol) {
  const GridDomain& g = sol.omega.grid();
  auto out = open_out(path);
  header(out, g, "");
  out << ",value,obstacle_active\n";
  for (std::size_t i = 0; i < g.size(); ++i) {
    coords(out, g, i);
    out << ',' << format_double(sol.omega[i]) << ',' << int(sol.obstacle_active[i]) << '\n';
  }
  if (!out) throw Error(ErrorCode::kIoError, "write failed for '" + path + "'");
}

void write_measure_csv(const std::string& path, const MeasureField& mu) {
  const GridDomain& g = mu.density.grid();
  auto out = open_out(path);
  header(out, g, " p=" + std::to_string(mu.p));
  out << ",density\n";
  for (std::size_t i = 0; i < g.size(); ++i) {
    coords(out, g, i);
    out << ',' << format_double(mu.density[i]) << '\n';
  }
  if (!out) throw Error(ErrorCode::kIoError, "write failed for '" + path + "'");
}

nlohmann::json envelope_summary(const EnvelopeSolution& sol) {
  const GridDomain& g = sol.omega.grid();
  std::size_t active = 0;
  for (auto a : sol.obstacle_active) active += a;
  return {{"iterations", sol.iterations},
          {"final_update", sol.final_update},
          {"relaxation", sol.relaxation},
          {"seconds", sol.seconds},
          {"maximality_residual", sol.maximality_residual},
          {"boundary_residual", sol.boundary_residual},
          {"obstacle_active_nodes", active},
          {"h", g.h()},
          {"nodes", g.size()},
          {"stencil_radius", g.stencil_radius()},
          {"spec", sol.condenser->spec().to_json()}};
}

void write_json(const std::string& path, const nlohmann::json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::kIoError, "write failed for '" + path + "'");
}

void ensure_directory(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create directory '" + dir + "': " + ec.message());
}

}  // namespace mscap
