#include <iostream>
#include <map>

#include <CLI11.hpp>

#include <stfosls/experiments/run.hpp>

using namespace stfosls;

int main(int argc, char** argv)
{
    CLI::App app{"Space-time least-squares runs for the heat equation on prismatic or simplicial meshes"};
    experiments::ExperimentConfig c;
    std::string solver = "auto";
    bool list = false;
    app.add_option("--problem", c.problem, "problem id, see --list-problems")->capture_default_str();
    app.add_option("--dim", c.dim, "spatial dimension")->check(CLI::IsMember({1, 2}))->capture_default_str();
    app.add_option("--mesh", c.mesh, "mesh family")
        ->transform(CLI::CheckedTransformer(std::map<std::string, experiments::MeshFamily>{
            {"prism", experiments::MeshFamily::prism}, {"simplex", experiments::MeshFamily::simplex}}))
        ->default_str("prism");
    app.add_option("--mode", c.mode, "refinement mode")
        ->transform(CLI::CheckedTransformer(std::map<std::string, adapt::RefinementMode>{
            {"uniform", adapt::RefinementMode::uniform}, {"adaptive", adapt::RefinementMode::adaptive}}))
        ->default_str("adaptive");
    app.add_option("--theta", c.theta, "Doerfler bulk parameter in (0, 1]")->capture_default_str();
    app.add_option("--max-dofs", c.max_dofs, "DoF budget; 0 picks 1e5 (d = 1) or 3e5 (d = 2)")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    app.add_option("--max-steps", c.max_steps, "step limit")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--out", c.out_dir, "directory for the CSV and SVG files");
    app.add_flag("--deterministic,!--timed", c.deterministic,
                 "write wall_time as 0 so reruns are byte-identical (default); --timed records times")
        ->capture_default_str();
    app.add_option("--solver", solver, "linear solver")->check(CLI::IsMember({"auto", "direct", "cg"}))->capture_default_str();
    app.add_option("--tol", c.solver.tol, "relative residual tolerance of the linear solver")->capture_default_str();
    app.add_option("--dump-mesh", c.mesh_dump, "write the final prismatic mesh to this file");
    app.add_flag("--list-problems", list, "print the problem registry and exit");
    CLI11_PARSE(app, argc, argv);

    if (list) {
        for (const auto& p : experiments::registry())
            std::cout << p.id << "  d=" << (p.dim == 0 ? std::string("any") : std::to_string(p.dim)) << "  "
                      << p.description << '\n';
        return 0;
    }
    c.solver.method = solver == "direct" ? assembly::SolverMethod::direct
                      : solver == "cg"   ? assembly::SolverMethod::cg
                                         : assembly::SolverMethod::automatic;
    c.on_step = [](const adapt::RunRecord& r) {
        std::cerr << "step " << r.step << "  dofs " << r.dofs << "  estimator " << r.estimator << '\n';
    };
    try {
        const auto res = experiments::run(c);
        if (res.rate)
            std::cout << "rate " << *res.rate << " over the last " << res.window << " steps\n";
        if (!res.csv_path.empty())
            std::cout << res.csv_path << '\n' << res.svg_path << '\n';
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
