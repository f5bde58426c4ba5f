// pcurv: run curvature-equation scenarios from JSON files.
//
//   pcurv --scenario ricci.json --out results/ [--seed 7] [--parallel 4]
//
// Exit status: 0 when every check passes, 1 when a check fails, 2 for
// usage or validation errors (nothing is written), 3 when a solver fails
// (a diagnostic manifest is written).

#include "scenario.hpp"

#include <CLI11.hpp>
#include <fmt/chrono.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using pcurv::cli::json;

namespace {

json read_scenario_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw pcurv::validation_error("cannot open scenario file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    const auto text = buf.str();
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) return json::object();
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw pcurv::validation_error(std::string("scenario is not valid JSON: ") + e.what());
    }
}

void write_file(const fs::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << contents;
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::string utc_now() {
    return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::chrono::system_clock::to_time_t(std::chrono::system_clock::now())));
}

struct Job {
    json resolved;
    fs::path dir;
};

struct Done {
    pcurv::cli::RunOutcome outcome;
    std::string started;
    double seconds = 0.0;
};

Done run_job(const Job& job, int parallel) {
    Done d;
    d.started = utc_now();
    const auto t0 = std::chrono::steady_clock::now();
    d.outcome = pcurv::cli::run_scenario(job.resolved, parallel);
    d.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return d;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Radially symmetric curvature equations: cones, solves, exhaustions and barrier certificates"};
    std::string scenario_path;
    std::string out_dir = "pcurv-out";
    std::optional<std::uint64_t> seed;
    int parallel = 1;
    app.add_option("--scenario", scenario_path, "scenario JSON file (an object, or an array for a batch)")
        ->required()
        ->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "overrides the scenario seed");
    app.add_option("--parallel", parallel, "worker threads for exhaustions and batches")->check(CLI::PositiveNumber);
    CLI11_PARSE(app, argc, argv);

    std::vector<Job> jobs;
    try {
        const json doc = read_scenario_file(scenario_path);
        const bool batch = doc.is_array();
        const std::vector<json> items = batch ? doc.get<std::vector<json>>() : std::vector<json>{doc};
        for (std::size_t i = 0; i < items.size(); ++i) {
            json resolved;
            try {
                resolved = pcurv::cli::resolve_scenario(items[i], seed);
                pcurv::cli::validate_scenario(resolved);
            } catch (const pcurv::validation_error& e) {
                throw pcurv::validation_error(batch ? fmt::format("batch entry {}: {}", i, e.what()) : e.what());
            }
            fs::path dir = out_dir;
            if (batch) dir /= resolved["name"].get<std::string>();
            jobs.push_back({std::move(resolved), dir});
        }
        for (std::size_t i = 0; i < jobs.size(); ++i)
            for (std::size_t j = i + 1; j < jobs.size(); ++j)
                if (jobs[i].dir == jobs[j].dir)
                    throw pcurv::validation_error("batch entries share the name " + jobs[i].resolved["name"].get<std::string>());
    } catch (const pcurv::validation_error& e) {
        std::cerr << "pcurv: " << e.what() << "\n";
        return 2;
    }

    // batches run one scenario per worker; a single scenario gets all threads
    std::vector<Done> done(jobs.size());
    if (jobs.size() > 1 && parallel > 1) {
        std::size_t next = 0;
        while (next < jobs.size()) {
            std::vector<std::future<Done>> running;
            const std::size_t stop = std::min(jobs.size(), next + static_cast<std::size_t>(parallel));
            for (std::size_t i = next; i < stop; ++i)
                running.push_back(std::async(std::launch::async, run_job, std::cref(jobs[i]), 1));
            for (std::size_t i = next; i < stop; ++i) done[i] = running[i - next].get();
            next = stop;
        }
    } else {
        for (std::size_t i = 0; i < jobs.size(); ++i) done[i] = run_job(jobs[i], parallel);
    }

    int status = 0;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        const auto& o = done[i].outcome;
        fs::create_directories(jobs[i].dir);
        for (const auto& [name, contents] : o.files) write_file(jobs[i].dir / name, contents);
        write_file(jobs[i].dir / "manifest.json", o.manifest.dump(2) + "\n");
        const json timing{{"started_utc", done[i].started}, {"elapsed_seconds", done[i].seconds}};
        write_file(jobs[i].dir / "timing.json", timing.dump(2) + "\n");
        const auto st = o.manifest["status"].get<std::string>();
        std::cout << fmt::format("{}: {} ({})\n", jobs[i].resolved["name"].get<std::string>(), st,
                                 jobs[i].dir.string());
        if (st == "error")
            status = 3;
        else if (st == "fail" && status == 0)
            status = 1;
    }
    return status;
}
