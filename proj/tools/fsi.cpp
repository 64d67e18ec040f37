#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "fsi/scenario.hpp"

using namespace fsi;

namespace {

int fail_config(const std::string& msg) {
    std::cerr << "config error: " << msg << "\n";
    return 2;
}

int fail_run(const std::string& msg) {
    std::cerr << "simulation aborted: " << msg << "\n";
    return 3;
}

void print_table(const ConvergenceTable& t, std::ostream& out) {
    out << "# " << t.label << "\n";
    out << "param,error,order\n";
    char buf[128];
    for (const auto& r : t.rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", r.param, r.error, r.order);
        out << buf;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"fitted-mesh DLM fluid-structure interaction simulator"};
    app.set_help_flag("--help", "print help");
    app.require_subcommand(1);

    // fsi mesh
    auto* cmd_mesh = app.add_subcommand("mesh", "generate a mesh and write MSH 2.2");
    std::string mesh_geom, mesh_out;
    double mesh_h = 0.0;
    cmd_mesh->add_option("--geometry", mesh_geom, "case name or scenario TOML")->required();
    cmd_mesh->add_option("--h", mesh_h, "target mesh size (overrides config)");
    cmd_mesh->add_option("--out", mesh_out, "output .msh path")->required();

    // fsi run
    auto* cmd_run = app.add_subcommand("run", "run a scenario");
    std::string run_config, run_out;
    std::vector<std::string> run_sets;
    cmd_run->add_option("--config", run_config, "case name or scenario TOML")->required();
    cmd_run->add_option("--set", run_sets, "override section.key=value");
    cmd_run->add_option("--out", run_out, "output directory");

    // fsi convergence
    auto* cmd_conv = app.add_subcommand("convergence", "convergence study");
    std::string conv_case, conv_axis = "dt", conv_scheme = "prk2", conv_out;
    int conv_levels = 3;
    std::vector<std::string> conv_sets;
    cmd_conv->add_option("--case", conv_case, "case name")->required();
    cmd_conv->add_option("--axis", conv_axis, "h or dt")->check(CLI::IsMember({"h", "dt"}));
    cmd_conv->add_option("--levels", conv_levels, "number of refinement levels");
    cmd_conv->add_option("--scheme", conv_scheme, "prk1 or prk2")
        ->check(CLI::IsMember({"prk1", "prk2"}));
    cmd_conv->add_option("--set", conv_sets, "override section.key=value");
    cmd_conv->add_option("--out", conv_out, "output directory")->required();

    // fsi precond-study
    auto* cmd_pre = app.add_subcommand("precond-study", "GMRES robustness table");
    std::string pre_case, pre_out;
    std::vector<double> pre_h, pre_dt;
    std::vector<std::string> pre_sets;
    cmd_pre->add_option("--case", pre_case, "case name")->required();
    cmd_pre->add_option("--h", pre_h, "mesh sizes")->required();
    cmd_pre->add_option("--dt", pre_dt, "time steps")->required();
    cmd_pre->add_option("--set", pre_sets, "override section.key=value");
    cmd_pre->add_option("--out", pre_out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*cmd_mesh) {
            ScenarioConfig cfg = ScenarioConfig::load(mesh_geom);
            if (mesh_h > 0.0) cfg.h = mesh_h;
            cfg.geometry.h = cfg.h;
            Mesh m = cfg.make_mesh();
            write_msh_file(m, mesh_out);
            QualityReport q = quality(m);
            std::printf("wrote %s: %d triangles, %d nodes, min radius ratio %.3f\n",
                        mesh_out.c_str(), m.n_tris(), m.n_nodes(), q.min_radius_ratio);
            return 0;
        }

        if (*cmd_run) {
            ScenarioConfig cfg = ScenarioConfig::load(run_config);
            for (const auto& s : run_sets) cfg.set_override(s);
            if (!run_out.empty()) cfg.out_dir = run_out;
            RunResult rr = run_case(cfg);
            const auto& f = rr.final_state;
            std::printf("finished %zu steps in %.1fs: t=%.6g xc=(%.6g, %.6g) U=(%.6g, %.6g) "
                        "omega=%.6g\n",
                        rr.records.size() - 1, rr.wall_seconds, f.t, f.xc.x, f.xc.y, f.U.x,
                        f.U.y, f.omega);
            return 0;
        }

        if (*cmd_conv) {
            ScenarioConfig cfg = ScenarioConfig::case_default(conv_case);
            for (const auto& s : conv_sets) cfg.set_override(s);
            std::filesystem::create_directories(conv_out);
            if (conv_axis == "h") {
                if (conv_case != "cylinder")
                    return fail_config("spatial studies are defined for the cylinder case");
                CylinderStudy st = cylinder_study(cfg, conv_levels);
                std::ofstream f(std::filesystem::path(conv_out) / "convergence.csv");
                for (const auto* t : {&st.iso_l2, &st.iso_h1, &st.straight_l2, &st.straight_h1}) {
                    print_table(*t, f);
                    print_table(*t, std::cout);
                }
            } else {
                ConvergenceTable t = temporal_study(cfg, conv_scheme, conv_levels);
                std::ofstream f(std::filesystem::path(conv_out) / "convergence.csv");
                print_table(t, f);
                print_table(t, std::cout);
            }
            return 0;
        }

        if (*cmd_pre) {
            ScenarioConfig cfg = ScenarioConfig::case_default(pre_case);
            for (const auto& s : pre_sets) cfg.set_override(s);
            std::filesystem::create_directories(pre_out);
            auto cells = precond_study(cfg, pre_h, pre_dt);
            std::ofstream f(std::filesystem::path(pre_out) / "precond.csv");
            f << "h,dt,n_gmres,steps\n";
            std::printf("%10s %12s %10s\n", "h", "dt", "N_GMRES");
            char buf[160];
            for (const auto& c : cells) {
                std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%d\n", c.h, c.dt, c.n_gmres,
                              c.steps);
                f << buf;
                std::printf("%10.4g %12.6g %10.2f\n", c.h, c.dt, c.n_gmres);
            }
            return 0;
        }
    } catch (const ConfigError& e) {
        return fail_config(e.what());
    } catch (const InfeasibleGeometry& e) {
        return fail_config(e.what());
    } catch (const ParseError& e) {
        return fail_config(e.what());
    } catch (const FsiError& e) {
        return fail_run(e.what());
    }
    return 0;
}
