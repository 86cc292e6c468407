#pragma once

#include <memory>
#include <string>

#include "rlsac/sac.hpp"

namespace rlsac {

/// Trained policy plus the configuration it was built with.
struct ModelFile {
    Task task = Task::Line2D;
    int data_channels = 2;
    PolicyConfig policy_config;
    TrainConfig train_config;
    std::unique_ptr<GraphNet> policy;
};

/// Versioned text model: a key = value header recording the policy and
/// training configuration, then the parameter serialization.
void save_model(const std::string& path, Task task, int data_channels,
                const PolicyConfig& policy_config, const TrainConfig& train_config,
                const GraphNet& policy);

ModelFile load_model(const std::string& path);

}  // namespace rlsac
