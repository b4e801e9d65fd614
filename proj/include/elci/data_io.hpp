#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "elci/core.hpp"

namespace elci {

/// Headerless CSV, one observation per line, comma-separated components.
inline std::vector<Observation> read_observation_csv(std::istream& in, const std::string& name) {
    std::vector<Observation> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        // tolerate trailing carriage returns from foreign line endings
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (line.empty()) continue;
        Observation obs;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            try {
                std::size_t pos = 0;
                obs.push_back(std::stod(tok, &pos));
            } catch (const std::exception&) {
                throw ValidationError(name + ":" + std::to_string(lineno) + ": bad number '" +
                                      tok + "'");
            }
        }
        if (obs.empty())
            throw ValidationError(name + ":" + std::to_string(lineno) + ": empty observation");
        out.push_back(std::move(obs));
    }
    return out;
}

/// Writes observations losslessly (17 significant digits round-trips doubles).
inline void write_observation_csv(const std::vector<Observation>& sample, std::ostream& out) {
    char buf[40];
    for (const auto& obs : sample) {
        for (std::size_t c = 0; c < obs.size(); ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", obs[c]);
            out << (c ? "," : "") << buf;
        }
        out << '\n';
    }
}

/// Loads a dataset directory: one file model_<i>.csv per input model, 1-based.
inline InputDataset load_dataset_dir(const std::string& dir, int model_count) {
    InputDataset dataset;
    for (int i = 1; i <= model_count; ++i) {
        const std::string path = dir + "/model_" + std::to_string(i) + ".csv";
        std::ifstream in(path);
        if (!in) throw ValidationError("data: missing file '" + path + "'");
        dataset.models.push_back(read_observation_csv(in, path));
    }
    return dataset;
}

inline void save_dataset_dir(const InputDataset& dataset, const std::string& dir) {
    for (int i = 0; i < dataset.model_count(); ++i) {
        const std::string path = dir + "/model_" + std::to_string(i + 1) + ".csv";
        std::ofstream out(path, std::ios::trunc);
        if (!out) throw ValidationError("data: cannot write '" + path + "'");
        write_observation_csv(dataset.models[static_cast<std::size_t>(i)], out);
    }
}

}  // namespace elci
