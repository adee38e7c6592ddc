// Copyright 2026 The tcsbond Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "tcsbond/experiment.hpp"
#include "tcsbond/io.hpp"
#include "tcsbond/oracle.hpp"
#include "tcsbond/threshold.hpp"

namespace tcsbond::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

inline constexpr const char *kWorkersEnv = "TCSBOND_WORKERS";

/// Invalid argument combination detected after parsing.
class UsageError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Parses "lo:hi:count" into `count` evenly spaced values, endpoints included.
inline std::vector<double> parse_range(const std::string &text) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    if (parts.size() != 3) {
        throw UsageError("range must look like lo:hi:count, got '" + text + "'");
    }
    double lo = 0.0;
    double hi = 0.0;
    long count = 0;
    try {
        size_t used = 0;
        lo = std::stod(parts[0], &used);
        if (used != parts[0].size()) throw std::invalid_argument("");
        hi = std::stod(parts[1], &used);
        if (used != parts[1].size()) throw std::invalid_argument("");
        count = std::stol(parts[2], &used);
        if (used != parts[2].size()) throw std::invalid_argument("");
    } catch (const std::exception &) {
        throw UsageError("range must look like lo:hi:count, got '" + text + "'");
    }
    if (!(lo >= 0.0 && hi <= 1.0 && lo < hi) || count < 2) {
        throw UsageError("range needs 0 <= lo < hi <= 1 and count >= 2, got '" + text + "'");
    }
    std::vector<double> out;
    for (long i = 0; i < count; i++) {
        out.push_back(lo + (hi - lo) * double(i) / double(count - 1));
    }
    return out;
}

/// Reads "key = value" lines; '#' starts a comment.
inline std::vector<std::pair<std::string, std::string>> read_config_file(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw UsageError("cannot read config file '" + path + "'");
    }
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    int number = 0;
    auto trim = [](std::string s) {
        const char *ws = " \t\r";
        s.erase(0, s.find_first_not_of(ws));
        s.erase(s.find_last_not_of(ws) + 1);
        return s;
    };
    while (std::getline(in, line)) {
        number++;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw UsageError(path + ":" + std::to_string(number) + ": expected key=value");
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty() || key.find_first_of(" \t") != std::string::npos) {
            throw UsageError(path + ":" + std::to_string(number) + ": bad key");
        }
        out.emplace_back(key, value);
    }
    return out;
}

namespace internal {

struct Common {
    std::string scheme = "non-adaptive";
    uint64_t trials = 1000;
    uint64_t seed = 0;
    unsigned workers = 0;  // 0: environment or hardware default
    std::string output = "-";
    std::string format = "csv";
};

inline unsigned resolve_workers(unsigned requested) {
    if (requested > 0) return requested;
    if (const char *env = std::getenv(kWorkersEnv)) {
        try {
            long v = std::stol(env);
            if (v >= 1) return unsigned(v);
        } catch (const std::exception &) {
        }
        throw UsageError(std::string(kWorkersEnv) + " must be a positive integer");
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

inline Scheme require_scheme(const std::string &text) {
    auto s = parse_scheme(text);
    if (!s) throw UsageError("unknown scheme '" + text + "'");
    return *s;
}

inline OutputFormat require_format(const std::string &text) {
    auto f = parse_format(text);
    if (!f) throw UsageError("unknown format '" + text + "'");
    return *f;
}

// Output stream for "-" (the given stream) or a file path.
class Sink {
   public:
    Sink(const std::string &path, std::ostream &fallback) {
        if (path == "-" || path.empty()) {
            stream_ = &fallback;
        } else {
            file_ = std::make_unique<std::ofstream>(path);
            if (!*file_) throw UsageError("cannot open output '" + path + "'");
            stream_ = file_.get();
        }
    }
    std::ostream &get() {
        return *stream_;
    }

   private:
    std::unique_ptr<std::ofstream> file_;
    std::ostream *stream_;
};

inline void add_common(CLI::App *cmd, Common &c) {
    cmd->add_option("--scheme", c.scheme, "non-adaptive or adaptive")
        ->check(CLI::IsMember({"non-adaptive", "adaptive"}));
    cmd->add_option("--trials", c.trials, "trials per point")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", c.seed, "master seed");
    cmd->add_option("--workers", c.workers, std::string("worker threads (default: $") + kWorkersEnv +
                                                 " or all cores)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--output,-o", c.output, "output path, '-' for stdout");
    cmd->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
}

// Config entries become "--key value" arguments placed before the user's
// own, skipping keys the user passed explicitly.
inline std::vector<std::string> merge_config(const std::vector<std::string> &args) {
    std::string path;
    for (size_t i = 0; i < args.size(); i++) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[i + 1];
        } else if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
        }
    }
    if (path.empty()) return args;
    auto given = [&](const std::string &key) {
        std::string flag = "--" + key;
        return std::any_of(args.begin(), args.end(),
                           [&](const std::string &a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
    };
    std::vector<std::string> out;
    auto sub = std::find_if(args.begin(), args.end(), [](const std::string &a) {
        return a == "simulate" || a == "threshold" || a == "analytic" || a == "verify";
    });
    out.insert(out.end(), args.begin(), sub == args.end() ? sub : std::next(sub));
    for (const auto &[key, value] : read_config_file(path)) {
        if (key == "config") throw UsageError("config files cannot include other config files");
        if (given(key)) continue;
        out.push_back("--" + key);
        if (value != "true") out.push_back(value);
    }
    if (sub != args.end()) out.insert(out.end(), std::next(sub), args.end());
    return out;
}

}  // namespace internal

/// Runs the command line in-process. Returns the exit code: 0 success,
/// 1 verification or estimation failure, 2 usage error.
inline int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
    CLI::App app{"Bond-failure threshold simulator for topological cluster states", "tcsbond"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_path;
    int verbosity = 1;
    app.add_option("--config", config_path, "key=value file; explicit flags take precedence");
    app.add_flag("-v,--verbose", [&](int64_t n) { verbosity += int(n); }, "more progress output");
    app.add_flag("-q,--quiet", [&](int64_t) { verbosity = 0; }, "no progress output");

    internal::Common sim_common;
    std::vector<int> sim_distances{5};
    std::vector<double> sim_p_bonds{0.0};
    std::vector<double> sim_p_comps{0.01};
    bool sim_percolation_only = false;
    auto *simulate = app.add_subcommand("simulate", "estimate logical failure rates on a grid of points");
    internal::add_common(simulate, sim_common);
    simulate->add_option("--distance,--distances", sim_distances, "code distance(s)")
        ->delimiter(',')
        ->check(CLI::Range(2, 101));
    simulate->add_option("--p-bond", sim_p_bonds, "bond failure rate(s)")->delimiter(',')->check(CLI::Range(0.0, 1.0));
    simulate->add_option("--p-comp", sim_p_comps, "measurement error rate(s)")
        ->delimiter(',')
        ->check(CLI::Range(0.0, 1.0));
    simulate->add_flag("--percolation-only", sim_percolation_only, "count percolation failures only");

    internal::Common th_common;
    std::vector<int> th_distances{5, 7, 9};
    std::vector<double> th_p_bonds{0.0};
    std::string th_range = "0.02:0.04:5";
    int th_bootstrap = 1000;
    std::string th_points_output;
    auto *threshold = app.add_subcommand("threshold", "locate the threshold crossing for each bond failure rate");
    internal::add_common(threshold, th_common);
    threshold->add_option("--distances", th_distances, "code distances")->delimiter(',')->check(CLI::Range(2, 101));
    threshold->add_option("--p-bond", th_p_bonds, "bond failure rate(s)")->delimiter(',')->check(CLI::Range(0.0, 1.0));
    threshold->add_option("--p-comp-range", th_range, "measurement error grid lo:hi:count");
    threshold->add_option("--bootstrap", th_bootstrap, "bootstrap resamples")->check(CLI::NonNegativeNumber);
    threshold->add_option("--points-output", th_points_output, "also write the underlying points here (csv)");

    std::string an_scheme;
    std::string an_format = "csv";
    auto *analytic = app.add_subcommand("analytic", "closed-form percolation limit on p_bond");
    analytic->add_option("--scheme", an_scheme, "non-adaptive or adaptive")->required();
    analytic->add_option("--format", an_format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

    std::string ver_suite = "all";
    uint64_t ver_trials = 100000;
    uint64_t ver_seed = 0;
    unsigned ver_workers = 0;
    bool ver_fault = false;
    auto *verify = app.add_subcommand("verify", "cross-check the main path against brute-force oracles");
    verify->add_option("--suite", ver_suite, "matching, small-lattice or all");
    verify->add_option("--trials", ver_trials, "Monte Carlo trials per small-lattice point")
        ->check(CLI::PositiveNumber);
    verify->add_option("--seed", ver_seed, "seed for instances and trials");
    verify->add_option("--workers", ver_workers, "worker threads")->check(CLI::PositiveNumber);
    verify->add_flag("--inject-weight-fault", ver_fault)->group("");  // test hook

    auto progress = [&](const PointEstimate &p) {
        if (verbosity >= 1) {
            err << "[" << to_string(p.scheme) << " d=" << p.d << " p_bond=" << format_number(p.p_bond)
                << " p_comp=" << format_number(p.p_comp) << "] " << p.failures << "/" << p.trials << " failed\n";
        }
    };

    try {
        std::vector<std::string> args(argv + 1, argv + argc);
        args = internal::merge_config(args);
        std::reverse(args.begin(), args.end());
        app.parse(args);

        if (*simulate) {
            SweepSpec spec;
            spec.scheme = internal::require_scheme(sim_common.scheme);
            spec.distances = sim_distances;
            spec.p_bonds = sim_p_bonds;
            spec.p_comps = sim_p_comps;
            spec.trials = sim_common.trials;
            spec.seed = sim_common.seed;
            spec.workers = internal::resolve_workers(sim_common.workers);
            spec.percolation_only = sim_percolation_only;
            OutputFormat format = internal::require_format(sim_common.format);
            internal::Sink sink(sim_common.output, out);
            RecordWriter writer(sink.get(), format, kPointCsvHeader);
            run_batch(spec, [&](const PointEstimate &p) {
                progress(p);
                writer.write(p);
            });
            writer.finish();
            return kExitOk;
        }

        if (*threshold) {
            SweepSpec spec;
            spec.scheme = internal::require_scheme(th_common.scheme);
            spec.distances = th_distances;
            spec.p_bonds = th_p_bonds;
            spec.p_comps = parse_range(th_range);
            spec.trials = th_common.trials;
            spec.seed = th_common.seed;
            spec.workers = internal::resolve_workers(th_common.workers);
            OutputFormat format = internal::require_format(th_common.format);
            if (std::set<int>(th_distances.begin(), th_distances.end()).size() < 3) {
                throw UsageError("threshold needs at least 3 distinct distances");
            }
            if (spec.p_comps.size() < 4) {
                throw UsageError("threshold needs at least 4 p_comp values");
            }
            internal::Sink sink(th_common.output, out);
            std::unique_ptr<internal::Sink> point_sink;
            std::unique_ptr<RecordWriter> point_writer;
            if (!th_points_output.empty()) {
                point_sink = std::make_unique<internal::Sink>(th_points_output, out);
                point_writer = std::make_unique<RecordWriter>(point_sink->get(), OutputFormat::csv, kPointCsvHeader);
            }
            RecordWriter writer(sink.get(), format, kThresholdCsvHeader);
            int status = kExitOk;
            for (double p_bond : spec.p_bonds) {
                SweepSpec one = spec;
                one.p_bonds = {p_bond};
                auto points = run_batch(one, [&](const PointEstimate &p) {
                    progress(p);
                    if (point_writer) point_writer->write(p);
                });
                ThresholdOptions opt;
                opt.bootstrap_resamples = th_bootstrap;
                opt.seed = spec.seed;
                try {
                    ThresholdEstimate est = estimate_threshold(points, opt);
                    writer.write(est);
                } catch (const std::invalid_argument &e) {
                    err << "error: threshold estimate failed at p_bond=" << format_number(p_bond) << ": " << e.what()
                        << "\n";
                    status = kExitFailure;
                }
            }
            if (point_writer) point_writer->finish();
            writer.finish();
            return status;
        }

        if (*analytic) {
            Scheme scheme = internal::require_scheme(an_scheme);
            RecordWriter writer(out, internal::require_format(an_format), "scheme,percolation_limit");
            double limit = percolation_limit_analytic(scheme);
            nlohmann::ordered_json j;
            j["scheme"] = to_string(scheme);
            j["percolation_limit"] = tcsbond::internal::json_number(limit);
            writer.write_row(std::string(to_string(scheme)) + "," + format_number(limit), j);
            writer.finish();
            return kExitOk;
        }

        if (*verify) {
            if (ver_suite != "matching" && ver_suite != "small-lattice" && ver_suite != "all") {
                throw UsageError("unknown suite '" + ver_suite + "'");
            }
            std::vector<verification::Check> checks;
            if (ver_suite != "small-lattice") {
                verification::MatchingSuiteOptions mopt;
                mopt.seed = ver_seed;
                mopt.inject_weight_fault = ver_fault;
                auto c = verification::run_matching_suite(mopt);
                checks.insert(checks.end(), c.begin(), c.end());
            }
            if (ver_suite != "matching") {
                verification::SmallLatticeSuiteOptions sopt;
                sopt.trials = ver_trials;
                sopt.seed = ver_seed;
                sopt.workers = internal::resolve_workers(ver_workers);
                auto c = verification::run_small_lattice_suite(sopt);
                checks.insert(checks.end(), c.begin(), c.end());
            }
            bool ok = true;
            out << "suite,check,result,detail\n";
            for (const auto &c : checks) {
                ok = ok && c.passed;
                out << c.suite << ',' << tcsbond::internal::csv_field(c.name) << ',' << (c.passed ? "PASS" : "FAIL")
                    << ',' << tcsbond::internal::csv_field(c.detail) << '\n';
            }
            return ok ? kExitOk : kExitFailure;
        }
    } catch (const CLI::ParseError &e) {
        int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    } catch (const UsageError &e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const BatchError &e) {
        err << "error: " << e.what() << " (" << e.partial().size() << " points completed)\n";
        return kExitFailure;
    } catch (const std::invalid_argument &e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}

}  // namespace tcsbond::cli
