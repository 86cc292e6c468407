// Command-line front end: scene generation, training, evaluation, and the
// outlier-rate benchmark sweep.
#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rlsac/bench.hpp"
#include "rlsac/model_io.hpp"

namespace rlsac {
namespace {

struct RunConfig {
    std::string task = "line2d";
    std::uint64_t seed = 0;

    // Scene generation.
    int n_points = -1;          // -1: task default (100 line, 150 F)
    double outlier_rate = 0.3;
    double noise_sigma = 0.5;   // F-task pixel noise

    // Episode.
    int kappa = 2;
    int sigma_no_improve = 3;
    int psi_max_steps = 15;

    // Policy network.
    int k_neighbors = 15;
    int edgeconv_layers = 2;
    int hidden_width = 64;
    int head_width = 64;

    // Training.
    double gamma = 0.95;
    double polyak = 0.005;
    double learning_rate = 3e-4;
    double alpha = 0.2;
    int batch_size = 64;
    int updates_per_step = 1;
    int warmup_transitions = 500;
    int epochs = 100;
    int scenes_per_epoch = 1000;
    std::uint64_t buffer_capacity = 100000;

    // Evaluation.
    int episodes = 10;
    int steps = -1;             // -1: task default (14 line for a 150 budget, 15 F)
    int scene_count = 1000;
    double tolerance = -1.0;    // -1: task default (0.5 deg line, 10 deg pose)
    int threads = 0;            // 0: RLSAC_THREADS env var, else 1
    bool timing = false;

    Task task_enum() const { return task_from_tag(task); }
    int resolved_n_points() const {
        return n_points > 0 ? n_points : (task_enum() == Task::Line2D ? 100 : 150);
    }
    int resolved_steps() const {
        return steps > 0 ? steps : (task_enum() == Task::Line2D ? 14 : 15);
    }
    double resolved_tolerance() const {
        return tolerance > 0 ? tolerance : (task_enum() == Task::Line2D ? 0.5 : 10.0);
    }
    double task_epsilon() const { return task_enum() == Task::Line2D ? 0.1 : 4.0; }
    int resolved_threads() const {
        if (threads > 0) return threads;
        if (const char* env = std::getenv("RLSAC_THREADS")) {
            const int t = std::atoi(env);
            if (t > 0) return t;
        }
        return 1;
    }
};

std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// --- key = value config file ---------------------------------------------

template <typename Fn>
void for_each_field(RunConfig& cfg, Fn&& fn) {
    fn("task", cfg.task);
    fn("seed", cfg.seed);
    fn("n_points", cfg.n_points);
    fn("outlier_rate", cfg.outlier_rate);
    fn("noise_sigma", cfg.noise_sigma);
    fn("kappa", cfg.kappa);
    fn("sigma_no_improve", cfg.sigma_no_improve);
    fn("psi_max_steps", cfg.psi_max_steps);
    fn("k_neighbors", cfg.k_neighbors);
    fn("edgeconv_layers", cfg.edgeconv_layers);
    fn("hidden_width", cfg.hidden_width);
    fn("head_width", cfg.head_width);
    fn("gamma", cfg.gamma);
    fn("polyak", cfg.polyak);
    fn("learning_rate", cfg.learning_rate);
    fn("alpha", cfg.alpha);
    fn("batch_size", cfg.batch_size);
    fn("updates_per_step", cfg.updates_per_step);
    fn("warmup_transitions", cfg.warmup_transitions);
    fn("epochs", cfg.epochs);
    fn("scenes_per_epoch", cfg.scenes_per_epoch);
    fn("buffer_capacity", cfg.buffer_capacity);
    fn("episodes", cfg.episodes);
    fn("steps", cfg.steps);
    fn("scene_count", cfg.scene_count);
    fn("tolerance", cfg.tolerance);
    fn("threads", cfg.threads);
    fn("timing", cfg.timing);
}

void field_to_stream(std::ostream& out, const std::string& key, const std::string& v) {
    out << key << " = " << v << "\n";
}
void field_to_stream(std::ostream& out, const std::string& key, double v) {
    out << key << " = " << format_real(v) << "\n";
}
template <typename T>
void field_to_stream(std::ostream& out, const std::string& key, T v) {
    out << key << " = " << v << "\n";
}
void field_to_stream(std::ostream& out, const std::string& key, bool v) {
    out << key << " = " << (v ? "true" : "false");
    out << "\n";
}

void field_from_string(const std::string& raw, std::string& v) { v = raw; }
void field_from_string(const std::string& raw, double& v) { v = std::stod(raw); }
void field_from_string(const std::string& raw, int& v) { v = std::stoi(raw); }
void field_from_string(const std::string& raw, std::uint64_t& v) { v = std::stoull(raw); }
void field_from_string(const std::string& raw, bool& v) {
    if (raw == "true" || raw == "1") v = true;
    else if (raw == "false" || raw == "0") v = false;
    else throw ConfigError("config: expected true/false, got '" + raw + "'");
}

void dump_config(std::ostream& out, RunConfig& cfg) {
    for_each_field(cfg, [&](const std::string& key, auto& value) {
        field_to_stream(out, key, value);
    });
}

void load_config_file(const std::string& path, RunConfig& cfg) {
    std::ifstream in(path);
    if (!in) throw IoError("config: cannot open '" + path + "'");
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream ss(line);
        std::string key, eq, value;
        if (!(ss >> key)) continue;  // blank line
        if (!(ss >> eq >> value) || eq != "=")
            throw ParseError(path + ":" + std::to_string(line_no) + ": expected 'key = value'");
        bool known = false;
        for_each_field(cfg, [&](const std::string& name, auto& field) {
            if (name == key) {
                field_from_string(value, field);
                known = true;
            }
        });
        if (!known)
            throw ConfigError(path + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
}

// --- shared construction ---------------------------------------------------

PolicyConfig policy_config_of(const RunConfig& cfg) {
    PolicyConfig pc;
    pc.k_neighbors = cfg.k_neighbors;
    pc.edgeconv_layers = cfg.edgeconv_layers;
    pc.hidden_width = cfg.hidden_width;
    pc.head_width = cfg.head_width;
    return pc;
}

TrainConfig train_config_of(const RunConfig& cfg) {
    TrainConfig tc;
    tc.gamma = cfg.gamma;
    tc.polyak = cfg.polyak;
    tc.learning_rate = cfg.learning_rate;
    tc.batch_size = cfg.batch_size;
    tc.alpha = cfg.alpha;
    tc.updates_per_step = cfg.updates_per_step;
    tc.warmup_transitions = cfg.warmup_transitions;
    tc.epochs = cfg.epochs;
    tc.scenes_per_epoch = cfg.scenes_per_epoch;
    tc.buffer_capacity = cfg.buffer_capacity;
    return tc;
}

EpisodeConfig episode_config_of(const RunConfig& cfg) {
    EpisodeConfig ec;
    ec.kappa = cfg.kappa;
    ec.sigma_no_improve = cfg.sigma_no_improve;
    ec.psi_max_steps = cfg.psi_max_steps;
    ec.epsilon = cfg.task_epsilon();
    return ec;
}

std::uint64_t scene_seed(std::uint64_t base, std::uint64_t index) {
    return splitmix64(base ^ splitmix64(0xa5a5a5a5ULL + index));
}

SceneData make_scene(const RunConfig& cfg, double rate, std::uint64_t seed) {
    if (cfg.task_enum() == Task::Line2D)
        return gen_line_scene(rate, cfg.resolved_n_points(), seed);
    return gen_epipolar_scene(cfg.resolved_n_points(), rate, cfg.noise_sigma, seed);
}

std::vector<SceneData> make_scene_set(const RunConfig& cfg, double rate) {
    std::vector<SceneData> scenes;
    scenes.reserve(cfg.scene_count);
    for (int i = 0; i < cfg.scene_count; ++i)
        scenes.push_back(make_scene(cfg, rate, scene_seed(cfg.seed, i)));
    return scenes;
}

EvalConfig eval_config_of(const RunConfig& cfg) {
    EvalConfig ec;
    ec.episodes_per_scene = cfg.episodes;
    ec.steps_per_episode = cfg.resolved_steps();
    ec.sampling = SamplingMode::Max;
    ec.seed = splitmix64(cfg.seed ^ 0xe7a1ULL);
    ec.threads = cfg.resolved_threads();
    ec.timing = cfg.timing;
    return ec;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    return out;
}

void write_results_csv(std::ostream& out, const std::vector<RunResult>& results,
                       const std::string& method, double rate, bool header) {
    if (header) out << "scene_id,method,outlier_rate,error_deg,best_inlier_ratio,hypotheses_used,wall_ms\n";
    for (const auto& r : results)
        out << r.scene_id << ',' << method << ',' << format_real(rate) << ','
            << format_real(r.error_deg) << ',' << format_real(r.best_inlier_ratio) << ','
            << r.hypotheses_used << ',' << format_real(r.wall_ms) << "\n";
}

void write_summary_row(std::ostream& out, const std::string& method, double rate,
                       const EvalSummary& s) {
    out << method << ',' << format_real(rate) << ',' << format_real(s.maa_value) << ','
        << format_real(s.median_deg) << ',' << s.n_scenes << "\n";
}

// --- commands --------------------------------------------------------------

int cmd_gen(const RunConfig& cfg, int count, const std::string& out_dir) {
    std::ofstream manifest = open_out(out_dir + "/manifest.txt");
    for (int i = 0; i < count; ++i) {
        const std::uint64_t seed = scene_seed(cfg.seed, i);
        const SceneData scene = make_scene(cfg, cfg.outlier_rate, seed);
        char name[48];
        std::snprintf(name, sizeof(name), "scene_%05d.txt", i);
        save_scene(out_dir + "/" + name, scene);
        manifest << name << ' ' << seed << "\n";
    }
    if (!manifest) throw IoError("gen: write failed in '" + out_dir + "'");
    return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& model_path, const std::string& log_path) {
    const Task task = cfg.task_enum();
    const int c = task == Task::Line2D ? 2 : 5;
    SacAgent agent(c + 3, c, policy_config_of(cfg), train_config_of(cfg),
                   splitmix64(cfg.seed ^ 0x7a1bULL));
    Rng rng(splitmix64(cfg.seed ^ 0x5eedULL));

    std::ofstream log = open_out(log_path);
    log << "epoch,mean_reward,critic_loss,actor_loss,buffer_size\n";

    const auto stream = [&cfg](int epoch, int scene_index) {
        const std::uint64_t seed =
            scene_seed(cfg.seed, static_cast<std::uint64_t>(epoch) * 1000003ULL + scene_index);
        return make_scene(cfg, cfg.outlier_rate, seed);
    };
    EpochLog last{};
    train(agent, episode_config_of(cfg), stream, rng, [&](const EpochLog& e) {
        log << e.epoch << ',' << format_real(e.mean_reward) << ',' << format_real(e.critic_loss)
            << ',' << format_real(e.actor_loss) << ',' << e.buffer_size << "\n";
        last = e;
    });
    if (!log) throw IoError("train: write failed for '" + log_path + "'");

    save_model(model_path, task, c, policy_config_of(cfg), train_config_of(cfg), agent.policy());
    if (cfg.epochs > 0)
        std::printf("epoch %d mean_reward %s critic_loss %s actor_loss %s\n", last.epoch,
                    format_real(last.mean_reward).c_str(), format_real(last.critic_loss).c_str(),
                    format_real(last.actor_loss).c_str());
    return 0;
}

int cmd_eval(const RunConfig& cfg, const std::string& model_path, const std::string& results_path,
             const std::string& summary_path) {
    const ModelFile model = load_model(model_path);
    if (model.task != cfg.task_enum())
        throw ConfigError("eval: model task '" + std::string(task_tag(model.task)) +
                          "' does not match configured task '" + cfg.task + "'");

    const std::vector<SceneData> scenes = make_scene_set(cfg, cfg.outlier_rate);
    const EvalConfig ec = eval_config_of(cfg);
    const double tol = cfg.resolved_tolerance();

    const auto rl = evaluate_rlsac(*model.policy, scenes, ec);
    const auto base = evaluate_ransac(scenes, ec);

    std::ofstream results = open_out(results_path);
    write_results_csv(results, rl, "rlsac", cfg.outlier_rate, true);
    write_results_csv(results, base, "ransac", cfg.outlier_rate, false);
    if (!results) throw IoError("eval: write failed for '" + results_path + "'");

    std::ofstream summary = open_out(summary_path);
    summary << "method,outlier_rate,maa,median_deg,n_scenes\n";
    write_summary_row(summary, "rlsac", cfg.outlier_rate, summarize(rl, tol));
    write_summary_row(summary, "ransac", cfg.outlier_rate, summarize(base, tol));
    if (!summary) throw IoError("eval: write failed for '" + summary_path + "'");
    return 0;
}

int cmd_bench(const RunConfig& cfg, const std::string& shared_model,
              const std::string& model_pattern, const std::string& summary_path,
              const std::string& plot_path) {
    const std::vector<double> rates{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7};
    const double tol = cfg.resolved_tolerance();

    std::ofstream summary = open_out(summary_path);
    summary << "method,outlier_rate,maa,median_deg,n_scenes,transfer\n";
    std::ofstream plot = open_out(plot_path);
    plot << "rate,method,maa,median\n";

    for (double rate : rates) {
        const std::vector<SceneData> scenes = make_scene_set(cfg, rate);
        const EvalConfig ec = eval_config_of(cfg);

        const EvalSummary base = summarize(evaluate_ransac(scenes, ec), tol);
        summary << "ransac," << format_real(rate) << ',' << format_real(base.maa_value) << ','
                << format_real(base.median_deg) << ',' << base.n_scenes << ",false\n";
        plot << format_real(rate) << ",ransac," << format_real(base.maa_value) << ','
             << format_real(base.median_deg) << "\n";

        std::string model_path = shared_model;
        if (model_path.empty() && !model_pattern.empty()) {
            char rate_tag[16];
            std::snprintf(rate_tag, sizeof(rate_tag), "%.1f", rate);
            model_path = model_pattern;
            const auto pos = model_path.find("{rate}");
            if (pos == std::string::npos)
                throw ConfigError("bench: --model-pattern must contain {rate}");
            model_path.replace(pos, 6, rate_tag);
        }
        if (model_path.empty()) continue;

        const ModelFile model = load_model(model_path);
        if (model.task != cfg.task_enum())
            throw ConfigError("bench: model task mismatch for '" + model_path + "'");
        const EvalSummary rl = summarize(evaluate_rlsac(*model.policy, scenes, ec), tol);
        const bool transfer = !shared_model.empty();
        summary << "rlsac," << format_real(rate) << ',' << format_real(rl.maa_value) << ','
                << format_real(rl.median_deg) << ',' << rl.n_scenes << ','
                << (transfer ? "true" : "false") << "\n";
        plot << format_real(rate) << ",rlsac," << format_real(rl.maa_value) << ','
             << format_real(rl.median_deg) << "\n";
    }
    if (!summary || !plot) throw IoError("bench: write failed");
    return 0;
}

int run(int argc, char** argv) {
    RunConfig cfg;

    // The config file is applied before flag parsing so flags override it.
    for (int i = 1; i + 1 < argc; ++i)
        if (std::string(argv[i]) == "--config") load_config_file(argv[i + 1], cfg);

    CLI::App app{"RLSAC: reinforcement-learned sample consensus"};
    app.require_subcommand(1);
    std::string config_path;
    bool want_dump = false;
    app.add_option("--config", config_path, "key = value configuration file");
    app.add_flag("--dump-config", want_dump, "print the merged configuration and exit");

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--task", cfg.task)->check(CLI::IsMember({"line2d", "fundamental"}));
        sub->add_option("--seed", cfg.seed);
        sub->add_option("--n-points", cfg.n_points);
        sub->add_option("--outlier-rate", cfg.outlier_rate);
        sub->add_option("--noise-sigma", cfg.noise_sigma);
        sub->add_option("--k-neighbors", cfg.k_neighbors);
        sub->add_option("--hidden-width", cfg.hidden_width);
        sub->add_option("--head-width", cfg.head_width);
        sub->add_option("--threads", cfg.threads);
        sub->add_flag("--timing", cfg.timing);
        sub->add_option("--config", config_path);  // accepted per-subcommand too
        sub->add_flag("--dump-config", want_dump);
    };

    // gen
    int gen_count = 10;
    std::string gen_dir = ".";
    CLI::App* gen = app.add_subcommand("gen", "generate scene files");
    add_common(gen);
    gen->add_option("--count", gen_count);
    gen->add_option("--out-dir", gen_dir);

    // train
    std::string model_out = "model.txt", log_out = "train_log.csv";
    CLI::App* tr = app.add_subcommand("train", "train a policy");
    add_common(tr);
    tr->add_option("--epochs", cfg.epochs);
    tr->add_option("--scenes-per-epoch", cfg.scenes_per_epoch);
    tr->add_option("--batch-size", cfg.batch_size);
    tr->add_option("--learning-rate", cfg.learning_rate);
    tr->add_option("--alpha", cfg.alpha);
    tr->add_option("--gamma", cfg.gamma);
    tr->add_option("--warmup", cfg.warmup_transitions);
    tr->add_option("--out", model_out);
    tr->add_option("--log", log_out);

    // eval
    std::string model_in, results_out = "results.csv", summary_out = "summary.csv";
    CLI::App* ev = app.add_subcommand("eval", "evaluate a model against RANSAC");
    add_common(ev);
    ev->add_option("--model", model_in)->required();
    ev->add_option("--episodes", cfg.episodes);
    ev->add_option("--steps", cfg.steps);
    ev->add_option("--scene-count", cfg.scene_count);
    ev->add_option("--tolerance", cfg.tolerance);
    ev->add_option("--results", results_out);
    ev->add_option("--summary", summary_out);

    // bench
    std::string shared_model, model_pattern;
    std::string bench_summary = "bench_summary.csv", plot_out = "plot_data.csv";
    CLI::App* be = app.add_subcommand("bench", "outlier-rate sweep");
    add_common(be);
    be->add_option("--shared-model", shared_model);
    be->add_option("--model-pattern", model_pattern, "per-rate model path with a {rate} placeholder");
    be->add_option("--episodes", cfg.episodes);
    be->add_option("--steps", cfg.steps);
    be->add_option("--scene-count", cfg.scene_count);
    be->add_option("--tolerance", cfg.tolerance);
    be->add_option("--summary", bench_summary);
    be->add_option("--plot-data", plot_out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;  // usage error
    }

    if (want_dump) {
        dump_config(std::cout, cfg);
        return 0;
    }
    if (gen->parsed()) return cmd_gen(cfg, gen_count, gen_dir);
    if (tr->parsed()) return cmd_train(cfg, model_out, log_out);
    if (ev->parsed()) return cmd_eval(cfg, model_in, results_out, summary_out);
    if (be->parsed()) return cmd_bench(cfg, shared_model, model_pattern, bench_summary, plot_out);
    return 1;
}

}  // namespace
}  // namespace rlsac

int main(int argc, char** argv) {
    try {
        return rlsac::run(argc, argv);
    } catch (const rlsac::DivergenceError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const rlsac::IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const rlsac::ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const rlsac::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
