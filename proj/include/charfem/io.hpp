#pragma once

#include "charfem/analysis.hpp"
#include "charfem/errors.hpp"
#include "charfem/fem.hpp"
#include "charfem/mesh.hpp"
#include "charfem/scheme.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace charfem {

namespace detail {

inline std::ofstream open_for_writing(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    return out;
}

inline std::string format_e6(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6e", v);
    return buf;
}

inline double parse_double(const std::string& s) {
    if (s.empty()) return std::nan("");
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw InvalidArgument("malformed number '" + s + "'");
    return v;
}

inline std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

} // namespace detail

inline constexpr const char* error_csv_header = "N,h,dt,E_H1_u,order,E_L2_p,order,E_L2inf_u,order,status";

/// Writes a convergence table; reals use "%.6e", the first row has empty orders.
inline void write_error_csv(std::ostream& out, const ErrorSeries& series) {
    using detail::format_e6;
    const auto oh = series.orders(&RelativeErrors::velocity_linf_h1);
    const auto op = series.orders(&RelativeErrors::pressure_l2_l2);
    const auto ol = series.orders(&RelativeErrors::velocity_linf_l2);
    out << error_csv_header << '\n';
    for (std::size_t i = 0; i < series.rows.size(); ++i) {
        const auto& r = series.rows[i];
        auto order = [&](const std::vector<double>& o) { return i == 0 ? std::string() : format_e6(o[i - 1]); };
        out << r.n << ',' << format_e6(r.h) << ',' << format_e6(r.dt) << ',' << format_e6(r.errors.velocity_linf_h1)
            << ',' << order(oh) << ',' << format_e6(r.errors.pressure_l2_l2) << ',' << order(op) << ','
            << format_e6(r.errors.velocity_linf_l2) << ',' << order(ol) << ',' << r.status << '\n';
    }
}

inline void write_error_csv(const std::filesystem::path& path, const ErrorSeries& series) {
    auto out = detail::open_for_writing(path);
    write_error_csv(out, series);
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

inline ErrorSeries read_error_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != error_csv_header) throw InvalidArgument("unexpected convergence CSV header");
    ErrorSeries s;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = detail::split(line, ',');
        if (f.size() != 10) throw InvalidArgument("convergence CSV row has " + std::to_string(f.size()) + " fields");
        ErrorRow r;
        r.n = std::stoi(f[0]);
        r.h = detail::parse_double(f[1]);
        r.dt = detail::parse_double(f[2]);
        r.errors.velocity_linf_h1 = detail::parse_double(f[3]);
        r.errors.pressure_l2_l2 = detail::parse_double(f[5]);
        r.errors.velocity_linf_l2 = detail::parse_double(f[7]);
        r.status = f[9];
        s.rows.push_back(r);
    }
    return s;
}

inline ErrorSeries read_error_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    return read_error_csv(in);
}

/// Per-step history as CSV.
inline void write_history_csv(const std::filesystem::path& path, const RunHistory& h) {
    auto out = detail::open_for_writing(path);
    out << "n,t,velocity_l2,velocity_h1,pressure_l2,dt_times_grad,jacobian_ok,divergence_ratio,wall_seconds\n";
    for (const auto& s : h.records)
        out << s.n << ',' << detail::format_e6(s.t) << ',' << detail::format_e6(s.velocity_l2) << ','
            << detail::format_e6(s.velocity_h1) << ',' << detail::format_e6(s.pressure_l2) << ','
            << detail::format_e6(s.cfl.dt_times_grad) << ',' << (s.cfl.jacobian_ok ? 1 : 0) << ','
            << detail::format_e6(s.divergence_ratio) << ',' << detail::format_e6(s.wall_seconds) << '\n';
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

/// Legacy ASCII VTK export.
///
/// A pressure field is written on the mesh itself. A velocity field is
/// sampled at vertices and edge midpoints and written on the mesh refined
/// once (four triangles per element), optionally with the pressure.
inline void export_vtk(std::ostream& out, const Field& field, const Field* pressure = nullptr) {
    const auto& space = *field.space;
    const auto& mesh = space.mesh();
    const int nv = mesh.num_vertices();
    const bool refined = field.role == Role::velocity;
    const int np = refined ? nv + mesh.num_edges() : nv;

    std::vector<Point> points(np);
    std::vector<Point> velocity(refined ? np : 0);
    std::vector<double> scalar(np, 0.0);
    const Field* p = refined ? pressure : &field;
    for (int v = 0; v < nv; ++v) points[v] = mesh.vertex(v);
    for (int k = 0; k < mesh.num_triangles(); ++k) {
        const auto& t = mesh.triangle(k);
        const auto& e = mesh.triangle_edges(k);
        for (int i = 0; i < 3; ++i) {
            Barycentric at_vertex{0.0, 0.0, 0.0};
            at_vertex[i] = 1.0;
            if (refined) velocity[t[i]] = field.velocity(k, at_vertex);
            if (p) scalar[t[i]] = p->pressure(k, at_vertex);
            if (refined) {
                Barycentric mid{0.5, 0.5, 0.5};
                mid[i] = 0.0;
                const int id = nv + e[i];
                points[id] = mesh.geometry(k).point(mid);
                velocity[id] = field.velocity(k, mid);
                if (p) scalar[id] = p->pressure(k, mid);
            }
        }
    }

    out << "# vtk DataFile Version 3.0\n";
    out << (refined ? "velocity field" : "pressure field") << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    out.precision(17);
    out << "POINTS " << np << " double\n";
    for (const auto& x : points) out << x.x() << ' ' << x.y() << " 0\n";
    const int nc = refined ? 4 * mesh.num_triangles() : mesh.num_triangles();
    out << "CELLS " << nc << ' ' << 4 * nc << '\n';
    for (int k = 0; k < mesh.num_triangles(); ++k) {
        const auto& t = mesh.triangle(k);
        if (!refined) {
            out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
            continue;
        }
        const auto& e = mesh.triangle_edges(k);
        const int m0 = nv + e[0], m1 = nv + e[1], m2 = nv + e[2];
        out << "3 " << t[0] << ' ' << m2 << ' ' << m1 << '\n';
        out << "3 " << t[1] << ' ' << m0 << ' ' << m2 << '\n';
        out << "3 " << t[2] << ' ' << m1 << ' ' << m0 << '\n';
        out << "3 " << m0 << ' ' << m1 << ' ' << m2 << '\n';
    }
    out << "CELL_TYPES " << nc << '\n';
    for (int c = 0; c < nc; ++c) out << "5\n";
    out << "POINT_DATA " << np << '\n';
    if (refined) {
        out << "VECTORS velocity double\n";
        for (const auto& v : velocity) out << v.x() << ' ' << v.y() << " 0\n";
    }
    if (p) {
        out << "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
        for (double s : scalar) out << s << '\n';
    }
}

inline void export_vtk(const std::filesystem::path& path, const Field& field, const Field* pressure = nullptr) {
    auto out = detail::open_for_writing(path);
    export_vtk(out, field, pressure);
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

/// Flat `key = value` configuration; `#` starts a comment.
inline std::map<std::string, std::string> parse_key_values(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) return std::string();
        const auto b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw InvalidArgument("config line " + std::to_string(lineno) + ": expected key = value");
        const auto key = trim(line.substr(0, eq));
        if (key.empty()) throw InvalidArgument("config line " + std::to_string(lineno) + ": empty key");
        if (!kv.emplace(key, trim(line.substr(eq + 1))).second)
            throw InvalidArgument("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    return kv;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw InvalidArgument("'" + key + "' expects a boolean, got '" + v + "'");
}

inline SchemeKind parse_scheme(const std::string& v) {
    if (v == "lgllv") return SchemeKind::lgllv;
    if (v == "lgq") return SchemeKind::lgq;
    throw InvalidArgument("unknown scheme '" + v + "' (expected lgllv or lgq)");
}

inline ElementPair parse_pair(const std::string& v) {
    if (v == "p2p1" || v == "taylor_hood") return ElementPair::taylor_hood;
    if (v == "mini" || v == "p1bp1") return ElementPair::mini;
    throw InvalidArgument("unknown element pair '" + v + "' (expected p2p1 or mini)");
}

inline MeshPattern parse_pattern(const std::string& v) {
    if (v == "right") return MeshPattern::right;
    if (v == "crisscross") return MeshPattern::crisscross;
    throw InvalidArgument("unknown mesh pattern '" + v + "' (expected right or crisscross)");
}

/// Run configuration file plus the output directory it names.
struct RunFile {
    RunConfig config;
    std::string out = "out";
};

inline RunFile parse_run_config(std::istream& in) {
    RunFile f;
    auto& c = f.config;
    for (const auto& [key, value] : parse_key_values(in)) {
        try {
            if (key == "nu") c.nu = detail::parse_double(value);
            else if (key == "T") c.final_time = detail::parse_double(value);
            else if (key == "dt") c.dt = detail::parse_double(value);
            else if (key == "scheme") c.scheme = parse_scheme(value);
            else if (key == "pair") c.pair = parse_pair(value);
            else if (key == "N") c.n = std::stoi(value);
            else if (key == "pattern") c.pattern = parse_pattern(value);
            else if (key == "mesh") c.mesh_file = value;
            else if (key == "problem") c.problem = value;
            else if (key == "strict_cfl") c.strict_cfl = parse_bool(key, value);
            else if (key == "c0") c.c0 = detail::parse_double(value);
            else if (key == "capture") c.capture_fields = parse_bool(key, value);
            else if (key == "threads") c.assembly.threads = std::stoi(value);
            else if (key == "reproducible") c.assembly.reproducible = parse_bool(key, value);
            else if (key == "out") f.out = value;
            else throw InvalidArgument("unknown config key '" + key + "'");
        } catch (const std::logic_error&) { // stod/stoi
            throw InvalidArgument("bad value '" + value + "' for '" + key + "'");
        }
    }
    c.validate();
    return f;
}

} // namespace charfem
