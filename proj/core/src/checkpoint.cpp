#include "dmbpn/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace dmbpn {

namespace {
constexpr const char* kMagic = "dmbpn-checkpoint v1";
}

void checkpoint_save(const ParamRegistry& registry, const std::string& fingerprint,
                     const std::string& path) {
    std::ofstream out(path);
    if (!out) throw CheckpointError("checkpoint_save: cannot open " + path);
    out << kMagic << "\n";
    out << "fingerprint " << fingerprint << "\n";
    char buf[40];
    registry.for_each([&](const std::string& name, const Tensor& t) {
        out << "tensor " << name << " " << (t.trainable ? 1 : 0) << " " << t.shape.size();
        for (int d : t.shape) out << " " << d;
        out << "\n";
        for (std::size_t i = 0; i < t.values.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%a", t.values[i]);
            out << buf << (i + 1 == t.values.size() ? "" : " ");
        }
        out << "\n";
    });
    if (!out) throw CheckpointError("checkpoint_save: write failed for " + path);
}

std::string checkpoint_fingerprint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CheckpointError("checkpoint: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != kMagic)
        throw CheckpointError("checkpoint: bad magic in " + path);
    if (!std::getline(in, line) || line.rfind("fingerprint ", 0) != 0)
        throw CheckpointError("checkpoint: missing fingerprint in " + path);
    return line.substr(std::string("fingerprint ").size());
}

ParamRegistry checkpoint_load(const std::string& path,
                              const std::string& expected_fingerprint) {
    std::ifstream in(path);
    if (!in) throw CheckpointError("checkpoint_load: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != kMagic)
        throw CheckpointError("checkpoint_load: bad magic in " + path);
    if (!std::getline(in, line) || line.rfind("fingerprint ", 0) != 0)
        throw CheckpointError("checkpoint_load: missing fingerprint in " + path);
    const std::string fingerprint = line.substr(std::string("fingerprint ").size());
    if (fingerprint != expected_fingerprint)
        throw CheckpointError("checkpoint_load: fingerprint mismatch\n  file:     " +
                              fingerprint + "\n  expected: " + expected_fingerprint);

    ParamRegistry reg;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream hs(line);
        std::string tag, name;
        int trainable = 0;
        std::size_t ndim = 0;
        hs >> tag >> name >> trainable >> ndim;
        if (tag != "tensor" || hs.fail())
            throw CheckpointError("checkpoint_load: malformed tensor header: " + line);
        std::vector<int> shape(ndim);
        for (auto& d : shape) hs >> d;
        if (hs.fail())
            throw CheckpointError("checkpoint_load: malformed shape for " + name);

        Tensor t(shape);
        t.trainable = trainable != 0;
        std::string values_line;
        if (!std::getline(in, values_line))
            throw CheckpointError("checkpoint_load: missing values for " + name);
        std::istringstream vs(values_line);
        for (std::size_t i = 0; i < t.values.size(); ++i) {
            std::string tok;
            if (!(vs >> tok))
                throw CheckpointError("checkpoint_load: too few values for " + name);
            t.values[i] = std::strtod(tok.c_str(), nullptr);
        }
        std::string extra;
        if (vs >> extra)
            throw CheckpointError("checkpoint_load: too many values for " + name);
        t.check_invariants(name);
        reg.add(name, std::move(t));
    }
    return reg;
}

void copy_values(const ParamRegistry& src, ParamRegistry& dst) {
    dst.for_each([&](const std::string& name, Tensor& t) {
        const Tensor& s = src.get(name);
        if (s.shape != t.shape)
            throw CheckpointError("copy_values: shape mismatch for " + name);
        t.values = s.values;
        t.clear_grad();
    });
}

}  // namespace dmbpn
