#include "rlsac/model_io.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace rlsac {

namespace {

void put(std::ostream& out, const std::string& key, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << key << " = " << buf << "\n";
}

void put(std::ostream& out, const std::string& key, long v) { out << key << " = " << v << "\n"; }

}  // namespace

void save_model(const std::string& path, Task task, int data_channels,
                const PolicyConfig& policy_config, const TrainConfig& train_config,
                const GraphNet& policy) {
    std::ofstream out(path);
    if (!out) throw IoError("save_model: cannot open '" + path + "' for writing");
    out << "RLSAC-MODEL v1\n";
    out << "task = " << task_tag(task) << "\n";
    put(out, "data_channels", static_cast<long>(data_channels));
    put(out, "k_neighbors", static_cast<long>(policy_config.k_neighbors));
    put(out, "edgeconv_layers", static_cast<long>(policy_config.edgeconv_layers));
    put(out, "hidden_width", static_cast<long>(policy_config.hidden_width));
    put(out, "head_width", static_cast<long>(policy_config.head_width));
    put(out, "gamma", train_config.gamma);
    put(out, "polyak", train_config.polyak);
    put(out, "learning_rate", train_config.learning_rate);
    put(out, "batch_size", static_cast<long>(train_config.batch_size));
    put(out, "alpha", train_config.alpha);
    put(out, "updates_per_step", static_cast<long>(train_config.updates_per_step));
    put(out, "warmup_transitions", static_cast<long>(train_config.warmup_transitions));
    put(out, "epochs", static_cast<long>(train_config.epochs));
    put(out, "scenes_per_epoch", static_cast<long>(train_config.scenes_per_epoch));
    put(out, "buffer_capacity", static_cast<long>(train_config.buffer_capacity));
    save_params(out, policy.params());
    if (!out) throw IoError("save_model: write failed for '" + path + "'");
}

ModelFile load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("load_model: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || line != "RLSAC-MODEL v1")
        throw ParseError(path + ":1: not an RLSAC model file");

    std::map<std::string, std::string> fields;
    while (in.peek() != 'D' && std::getline(in, line)) {
        std::istringstream ss(line);
        std::string key, eq, value;
        if (!(ss >> key >> eq >> value) || eq != "=")
            throw ParseError(path + ": malformed header line '" + line + "'");
        fields[key] = value;
    }

    auto get = [&](const std::string& key) -> const std::string& {
        auto it = fields.find(key);
        if (it == fields.end()) throw ParseError(path + ": missing header field '" + key + "'");
        return it->second;
    };

    ModelFile model;
    model.task = task_from_tag(get("task"));
    model.data_channels = std::stoi(get("data_channels"));
    model.policy_config.k_neighbors = std::stoi(get("k_neighbors"));
    model.policy_config.edgeconv_layers = std::stoi(get("edgeconv_layers"));
    model.policy_config.hidden_width = std::stoi(get("hidden_width"));
    model.policy_config.head_width = std::stoi(get("head_width"));
    model.train_config.gamma = std::stod(get("gamma"));
    model.train_config.polyak = std::stod(get("polyak"));
    model.train_config.learning_rate = std::stod(get("learning_rate"));
    model.train_config.batch_size = std::stoi(get("batch_size"));
    model.train_config.alpha = std::stod(get("alpha"));
    model.train_config.updates_per_step = std::stoi(get("updates_per_step"));
    model.train_config.warmup_transitions = std::stoi(get("warmup_transitions"));
    model.train_config.epochs = std::stoi(get("epochs"));
    model.train_config.scenes_per_epoch = std::stoi(get("scenes_per_epoch"));
    model.train_config.buffer_capacity = std::stoul(get("buffer_capacity"));

    Rng init_rng(0);
    model.policy = std::make_unique<GraphNet>(model.data_channels + 3, model.data_channels,
                                              model.policy_config, init_rng);
    load_params(in, model.policy->params());
    return model;
}

}  // namespace rlsac
