// Command-line front end: single runs, configured studies and field dumps.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "wemsfem/study.hpp"

namespace {

void add_run_options(CLI::App* cmd, wemsfem::RunRequest& req)
{
    cmd->add_option("--example", req.example, "1a, 1b, 2, 3, 4a or 4b")->check(CLI::IsMember(wemsfem::example_ids()));
    cmd->add_option("--nc", req.nc, "coarse cells per axis");
    cmd->add_option("--level", req.level, "edge level");
    cmd->add_option("--nf", req.nf, "fine cells per axis");
    cmd->add_option("--method", req.method, "wemsfem, fem or supg")->check(CLI::IsMember({"wemsfem", "fem", "supg"}));
    cmd->add_option("--quad-order", req.quad_order, "Gauss points per axis on fine cells");
    cmd->add_option("--baseline-quad-order", req.baseline_quad_order, "Gauss points per axis for fem / supg");
    cmd->add_option("--workers", req.workers, "threads for local solves (0 = all cores)");
    cmd->add_option("--epsilon", req.epsilon, "override the example's epsilon");
}

std::ofstream open_out(const std::string& path)
{
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write '" + path + "'");
    return os;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Wavelet-based edge multiscale FEM for convection-diffusion"};
    app.require_subcommand(1);

    wemsfem::RunRequest run_req;
    std::string run_out;
    auto* run = app.add_subcommand("run", "solve one configuration and write a CSV row");
    add_run_options(run, run_req);
    run->add_option("--out", run_out, "CSV path (stdout when omitted)");

    std::string config_path;
    auto* study = app.add_subcommand("study", "run a sweep from a key = value config");
    study->add_option("--config", config_path, "config file")->required()->check(CLI::ExistingFile);

    wemsfem::RunRequest dump_req;
    std::string dump_out;
    bool dump_reference = false;
    auto* dump = app.add_subcommand("dump-field", "write a solution as `x y value` lines");
    add_run_options(dump, dump_req);
    dump->add_option("--out", dump_out, "output path")->required();
    dump->add_flag("--reference", dump_reference, "dump the reference solution instead");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            const auto result = wemsfem::run_single(run_req);
            if (run_out.empty()) {
                std::cout << wemsfem::csv_header() << wemsfem::csv_row(result.report);
            } else {
                auto os = open_out(run_out);
                os << wemsfem::csv_header() << wemsfem::csv_row(result.report);
            }
        } else if (*study) {
            const auto cfg = wemsfem::StudyConfig::load(config_path);
            if (cfg.out.empty()) {
                wemsfem::run_study(cfg, &std::cout);
            } else {
                auto os = open_out(cfg.out);
                wemsfem::run_study(cfg, &os);
            }
        } else if (*dump) {
            const auto result = wemsfem::run_single(dump_req);
            auto os = open_out(dump_out);
            wemsfem::write_field(os, wemsfem::unit_square_grid(dump_req.nf), dump_reference ? result.reference : result.field);
            std::cerr << wemsfem::csv_row(result.report);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
