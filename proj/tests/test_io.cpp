#include "charfem/app.hpp"
#include "charfem/io.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

using namespace charfem;
using charfem::testing::unit_square;

namespace {

ErrorSeries sample_series() {
    ErrorSeries s;
    const double e[3][3] = {{8.449e-2, 1.798e-1, 7.794e-2}, {4.1234567891e-2, 9.87654321e-2, 3.3e-2}, {1, 2, 3}};
    int i = 0;
    for (int n : {16, 24, 32}) {
        ErrorRow r;
        r.n = n;
        r.h = 1.0 / n;
        r.dt = r.h * r.h;
        r.errors = {e[i][0], e[i][1], e[i][2]};
        s.rows.push_back(r);
        ++i;
    }
    s.rows[2].status = "step_rejected@3";
    s.rows[2].errors = {std::nan(""), std::nan(""), std::nan("")};
    return s;
}

double round_e6(double v) { return std::stod(detail::format_e6(v)); }

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST(ErrorCsv, HeaderAndLayout) {
    std::stringstream ss;
    write_error_csv(ss, sample_series());
    std::string line;
    std::getline(ss, line);
    EXPECT_EQ(line, "N,h,dt,E_H1_u,order,E_L2_p,order,E_L2inf_u,order,status");
    std::getline(ss, line);
    EXPECT_EQ(line, "16,6.250000e-02,3.906250e-03,8.449000e-02,,1.798000e-01,,7.794000e-02,,ok");
    std::getline(ss, line);
    EXPECT_EQ(detail::split(line, ',').size(), 10u);
    std::getline(ss, line);
    EXPECT_EQ(line.substr(line.rfind(',') + 1), "step_rejected@3");
    EXPECT_NE(line.find("nan"), std::string::npos);
}

TEST(ErrorCsv, RoundTripIsStableAtSixDigits) {
    const auto s = sample_series();
    std::stringstream a;
    write_error_csv(a, s);
    const auto back = read_error_csv(a);
    ASSERT_EQ(back.rows.size(), s.rows.size());
    for (std::size_t i = 0; i < s.rows.size(); ++i) {
        const auto& x = s.rows[i];
        const auto& y = back.rows[i];
        EXPECT_EQ(y.n, x.n);
        EXPECT_EQ(y.status, x.status);
        EXPECT_EQ(y.h, round_e6(x.h));
        EXPECT_EQ(y.dt, round_e6(x.dt));
        if (x.ok()) {
            EXPECT_EQ(y.errors.velocity_linf_h1, round_e6(x.errors.velocity_linf_h1));
            EXPECT_EQ(y.errors.pressure_l2_l2, round_e6(x.errors.pressure_l2_l2));
            EXPECT_EQ(y.errors.velocity_linf_l2, round_e6(x.errors.velocity_linf_l2));
        } else {
            EXPECT_TRUE(std::isnan(y.errors.velocity_linf_h1));
        }
    }
    // a second write of the parsed table is byte identical
    std::stringstream b, c;
    write_error_csv(b, back);
    const std::string once = b.str();
    write_error_csv(c, read_error_csv(b));
    EXPECT_EQ(c.str(), once);
}

TEST(ErrorCsv, RejectsMalformedInput) {
    std::stringstream bad_header("N,h\n");
    EXPECT_THROW(read_error_csv(bad_header), InvalidArgument);
    std::stringstream short_row(std::string(error_csv_header) + "\n8,1,2\n");
    EXPECT_THROW(read_error_csv(short_row), InvalidArgument);
    EXPECT_THROW(read_error_csv(std::filesystem::path("/nonexistent/dir/e.csv")), IoError);
}

TEST(ErrorCsv, FileRoundTrip) {
    const auto dir = std::filesystem::temp_directory_path() / "charfem_test_io";
    std::filesystem::remove_all(dir);
    const auto path = dir / "nested" / "errors.csv";
    write_error_csv(path, sample_series());
    const auto back = read_error_csv(path);
    EXPECT_EQ(back.rows.size(), 3u);
    std::filesystem::remove_all(dir);
}

TEST(Vtk, PressureOnTheBaseMesh) {
    const auto s = std::make_shared<const FESpace>(unit_square(2, MeshPattern::right), ElementPair::taylor_hood);
    const auto p = interpolate_pressure(s, [](const Point& x) { return x.x() - x.y(); });
    std::stringstream ss;
    export_vtk(ss, p);
    const std::string text = ss.str();
    EXPECT_NE(text.find("DATASET UNSTRUCTURED_GRID"), std::string::npos);
    EXPECT_NE(text.find("POINTS 9 double"), std::string::npos);
    EXPECT_NE(text.find("CELLS 8 32"), std::string::npos);
    EXPECT_NE(text.find("CELL_TYPES 8"), std::string::npos);
    EXPECT_NE(text.find("SCALARS pressure double 1"), std::string::npos);
    EXPECT_EQ(text.find("VECTORS"), std::string::npos);
}

TEST(Vtk, ZeroVelocityOnTheRefinedMesh) {
    const auto mesh = unit_square(2, MeshPattern::right);
    const auto s = std::make_shared<const FESpace>(mesh, ElementPair::taylor_hood);
    const auto u = Field::zero(s, Role::velocity);
    const auto p = Field::zero(s, Role::pressure);
    std::stringstream ss;
    export_vtk(ss, u, &p);
    const std::string text = ss.str();
    const int np = mesh->num_vertices() + mesh->num_edges();
    EXPECT_NE(text.find("POINTS " + std::to_string(np) + " double"), std::string::npos);
    EXPECT_NE(text.find("CELLS 32 128"), std::string::npos);
    EXPECT_NE(text.find("VECTORS velocity double"), std::string::npos);
    EXPECT_NE(text.find("SCALARS pressure double 1"), std::string::npos);
    // every vector line after the header is "0 0 0"
    std::stringstream rest(text.substr(text.find("VECTORS")));
    std::string line;
    std::getline(rest, line);
    for (int i = 0; i < np; ++i) {
        std::getline(rest, line);
        EXPECT_EQ(line, "0 0 0");
    }
}

TEST(Vtk, RefinedCellsKeepTheOrientation) {
    const auto mesh = unit_square(3);
    const auto s = std::make_shared<const FESpace>(mesh, ElementPair::taylor_hood);
    const auto u = interpolate_velocity(s, [](const Point& x) { return Point(x.x() * x.y(), 1.0); });
    std::stringstream ss;
    export_vtk(ss, u);
    std::string word;
    int np = 0;
    while (ss >> word && word != "POINTS") {}
    ss >> np >> word;
    std::vector<Point> pts(np);
    double z;
    for (auto& x : pts) ss >> x.x() >> x.y() >> z;
    int nc = 0, total = 0;
    ss >> word >> nc >> total;
    ASSERT_EQ(nc, 4 * mesh->num_triangles());
    double area = 0.0;
    for (int c = 0; c < nc; ++c) {
        int three, a, b, d;
        ss >> three >> a >> b >> d;
        const double cross = (pts[b] - pts[a]).x() * (pts[d] - pts[a]).y() - (pts[b] - pts[a]).y() * (pts[d] - pts[a]).x();
        EXPECT_GT(cross, 0.0);
        area += 0.5 * cross;
    }
    EXPECT_NEAR(area, 1.0, 1e-14);
}

TEST(Vtk, UnwritablePathIsAnIoError) {
    const auto s = std::make_shared<const FESpace>(unit_square(2), ElementPair::taylor_hood);
    EXPECT_THROW(export_vtk(std::filesystem::path("/proc/charfem/x.vtk"), Field::zero(s, Role::pressure)), IoError);
}

TEST(Config, ParsesEveryKey) {
    std::stringstream in("# run\n"
                         "nu = 1e-4\n"
                         "T = 0.5\n"
                         "dt = 0.01   # step\n"
                         "scheme = lgq\n"
                         "pair = mini\n"
                         "N = 12\n"
                         "pattern = right\n"
                         "problem = cavity\n"
                         "strict_cfl = true\n"
                         "c0 = 2\n"
                         "capture = yes\n"
                         "threads = 3\n"
                         "reproducible = false\n"
                         "out = results/a\n");
    const auto f = parse_run_config(in);
    const auto& c = f.config;
    EXPECT_EQ(c.nu, 1e-4);
    EXPECT_EQ(c.final_time, 0.5);
    EXPECT_EQ(c.dt, 0.01);
    EXPECT_EQ(c.scheme, SchemeKind::lgq);
    EXPECT_EQ(c.pair, ElementPair::mini);
    EXPECT_EQ(c.n, 12);
    EXPECT_EQ(c.pattern, MeshPattern::right);
    EXPECT_EQ(c.problem, "cavity");
    EXPECT_EQ(c.strict_cfl, std::optional<bool>(true));
    EXPECT_EQ(c.c0, 2.0);
    EXPECT_TRUE(c.capture_fields);
    EXPECT_EQ(c.assembly.threads, 3);
    EXPECT_FALSE(c.assembly.reproducible);
    EXPECT_EQ(f.out, "results/a");
}

TEST(Config, RejectsBadFiles) {
    const char* bad[] = {
        "dt = 0.1\nfoo = 1\n",        // unknown key
        "dt = 0.1\ndt = 0.2\n",       // duplicate
        "dt 0.1\n",                   // no '='
        "dt = abc\n",                 // not a number
        "dt = 0.1\nscheme = lg\n",    // unknown scheme
        "dt = 0.1\npair = p3p2\n",    // unknown pair
        "dt = 0.1\nstrict_cfl = maybe\n",
        "nu = 1\n",                   // dt missing
        "dt = 0.1\nT = 0.01\n",       // N_T = 0
        "dt = 0.1\nN = 1\n",
    };
    for (const char* text : bad) {
        std::stringstream in(text);
        EXPECT_THROW(parse_run_config(in), InvalidArgument) << text;
    }
}

TEST(App, DtRulesAndDefaultLists) {
    EXPECT_EQ(parse_dt_rule("h2"), DtRule::h2);
    EXPECT_EQ(parse_dt_rule("h3"), DtRule::h3);
    EXPECT_THROW(parse_dt_rule("h4"), InvalidArgument);
    EXPECT_EQ(default_n_list(DtRule::h2, false), (std::vector<int>{8, 12, 16, 24, 32}));
    EXPECT_EQ(default_n_list(DtRule::h3, false), (std::vector<int>{8, 10, 12, 16}));
    EXPECT_EQ(default_n_list(DtRule::h2, true).back(), 64);
}

TEST(App, ConvergenceStudyRejectsEmptyLists) {
    ConvergenceOptions o;
    EXPECT_THROW(run_convergence_study(o), InvalidArgument);
    o.n_list = {4, 1};
    EXPECT_THROW(run_convergence_study(o), InvalidArgument);
    o.n_list = {4};
    o.problem = "cavity";
    EXPECT_THROW(run_convergence_study(o), InvalidArgument);
}

TEST(App, ConvergenceRowsRecordFailuresAndSuccesses) {
    ConvergenceOptions o;
    o.final_time = 0.05;
    o.n_list = {8, 12};
    o.threads = 2;
    std::vector<int> seen;
    const auto s = run_convergence_study(o, [&](const ErrorRow& r) { seen.push_back(r.n); });
    EXPECT_EQ(seen, (std::vector<int>{8, 12}));
    ASSERT_EQ(s.rows.size(), 2u);
    EXPECT_EQ(s.rows[0].status, "step_rejected@1");
    EXPECT_TRUE(std::isnan(s.rows[0].errors.velocity_linf_l2));
    EXPECT_TRUE(s.rows[1].ok());
    EXPECT_EQ(s.rows[1].dt, 1.0 / 144.0);
    EXPECT_GT(s.rows[1].errors.velocity_linf_l2, 0.0);
    EXPECT_LE(s.rows[1].max_divergence_ratio, 1e-10);
    EXPECT_LE(s.rows[1].max_dt_times_grad, 0.25);
}

TEST(App, SamplingReproducesAnInterpolatedField) {
    const auto s = std::make_shared<const FESpace>(unit_square(4), ElementPair::taylor_hood);
    const auto u = interpolate_velocity(s, [](const Point& x) { return Point(x.x() * x.x(), x.y() - x.x()); });
    const auto samples = sample_velocity(u, cavity_window_lo, cavity_window_hi, 5, 3);
    ASSERT_EQ(samples.points.size(), 15u);
    for (std::size_t i = 0; i < samples.points.size(); ++i) {
        const auto& x = samples.points[i];
        EXPECT_NEAR((samples.velocity[i] - Point(x.x() * x.x(), x.y() - x.x())).norm(), 0.0, 1e-14);
    }
    EXPECT_EQ(samples.points.front(), cavity_window_lo);
    EXPECT_EQ(samples.points.back(), cavity_window_hi);
    EXPECT_THROW(sample_velocity(u, cavity_window_lo, cavity_window_hi, 1, 3), InvalidArgument);
}

TEST(App, CavitySnapshotsAndOutputs) {
    const auto dir = std::filesystem::temp_directory_path() / "charfem_test_cavity";
    std::filesystem::remove_all(dir);
    CavityOptions o;
    o.nu = 1.0;
    o.n = 6;
    o.dt = 0.01;
    o.final_time = 0.1;
    o.snapshots = 4;
    o.out = dir.string();
    const auto r = run_cavity(o);
    ASSERT_TRUE(r.history.completed());
    ASSERT_EQ(r.snapshots.size(), 5u);
    EXPECT_EQ(r.snapshot_times.front(), 0.0);
    EXPECT_EQ(r.oscillation.front(), 0.0);
    EXPECT_NEAR(r.snapshot_times.back(), 0.1, 1e-12);
    for (double m : r.oscillation) EXPECT_LE(m, 1.1);
    EXPECT_GT(r.oscillation.back(), 0.0);
    for (const char* f : {"history.csv", "velocity.vtk", "window_times.csv", "window_0.csv", "window_4.csv"})
        EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
    const std::string first = slurp(dir / "window_0.csv");
    EXPECT_EQ(first.substr(0, first.find('\n')), "x1,x2,u1,u2");
    std::filesystem::remove_all(dir);

    o.dt = 0.0;
    o.out.clear();
    EXPECT_THROW(run_cavity(o), InvalidArgument);
}
