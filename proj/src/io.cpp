#include "mlct/io.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace mlct {

NoiseSchedule RunConfig::schedule() const {
    if (schedule_paper_betas != 0) return paper_beta_schedule();
    return NoiseSchedule(schedule_beta0, schedule_beta1);
}

int RunConfig::effective_cluster_k() const {
    if (cluster_k > 0) return static_cast<int>(cluster_k);
    return std::min(32, 4 * static_cast<int>(data_classes));
}

std::map<std::string, double RunConfig::*> run_config_keys() {
    return {
        {"schedule.beta0", &RunConfig::schedule_beta0},
        {"schedule.beta1", &RunConfig::schedule_beta1},
        {"schedule.paper_betas", &RunConfig::schedule_paper_betas},
        {"grid.epsilon", &RunConfig::grid_epsilon},
        {"grid.T", &RunConfig::grid_T},
        {"grid.N", &RunConfig::grid_N},
        {"grid.rho", &RunConfig::grid_rho},
        {"data.classes", &RunConfig::data_classes},
        {"data.items_per_class", &RunConfig::data_items_per_class},
        {"data.frames_min", &RunConfig::data_frames_min},
        {"data.frames_max", &RunConfig::data_frames_max},
        {"data.channels", &RunConfig::data_channels},
        {"cond.dim", &RunConfig::cond_dim},
        {"codec.n", &RunConfig::codec_n},
        {"codec.d", &RunConfig::codec_d},
        {"codec.level", &RunConfig::codec_level},
        {"codec.width", &RunConfig::codec_width},
        {"codec.lambda_j", &RunConfig::codec_lambda_j},
        {"codec.quantize", &RunConfig::codec_quantize},
        {"codec.steps", &RunConfig::codec_steps},
        {"codec.batch", &RunConfig::codec_batch},
        {"codec.lr", &RunConfig::codec_lr},
        {"cluster.k", &RunConfig::cluster_k},
        {"cluster.da", &RunConfig::cluster_da},
        {"cm.omega", &RunConfig::cm_omega},
        {"cm.gamma", &RunConfig::cm_gamma},
        {"cm.lr", &RunConfig::cm_lr},
        {"cm.lr_final", &RunConfig::cm_lr_final},
        {"cm.steps", &RunConfig::cm_steps},
        {"cm.batch", &RunConfig::cm_batch},
        {"cm.huber_c", &RunConfig::cm_huber_c},
        {"cm.width", &RunConfig::cm_width},
        {"cm.blocks", &RunConfig::cm_blocks},
        {"cm.time_dim", &RunConfig::cm_time_dim},
        {"cm.use_clustering", &RunConfig::cm_use_clustering},
        {"baseline.steps", &RunConfig::baseline_steps},
        {"baseline.batch", &RunConfig::baseline_batch},
        {"baseline.lr", &RunConfig::baseline_lr},
        {"baseline.ode_steps", &RunConfig::baseline_ode_steps},
        {"sample.nfe", &RunConfig::sample_nfe},
        {"sample.frames", &RunConfig::sample_frames},
        {"sample.per_class", &RunConfig::sample_per_class},
        {"seed", &RunConfig::seed},
    };
}

std::string RunConfig::canonical() const {
    std::ostringstream os;
    for (const auto& [key, member] : run_config_keys()) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.17g", this->*member);
        os << key << "=" << buf << "\n";
    }
    return os.str();
}

uint64_t RunConfig::hash() const {
    uint64_t h = 14695981039346656037ull;
    for (char c : canonical()) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

void apply_config_line(RunConfig& cfg, const std::string& raw) {
    std::string line = raw;
    if (auto pos = line.find('#'); pos != std::string::npos) line.resize(pos);
    auto trim = [](std::string s) {
        size_t a = s.find_first_not_of(" \t\r\n");
        size_t b = s.find_last_not_of(" \t\r\n");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    line = trim(line);
    if (line.empty()) return;
    auto eq = line.find('=');
    if (eq == std::string::npos)
        throw std::invalid_argument("config: malformed line '" + raw + "'");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    auto keys = run_config_keys();
    auto it = keys.find(key);
    if (it == keys.end())
        throw std::invalid_argument("config: unknown key '" + key + "'");
    try {
        cfg.*(it->second) = std::stod(val);
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad value for '" + key + "': " + val);
    }
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    RunConfig cfg;
    std::string line;
    while (std::getline(in, line)) apply_config_line(cfg, line);
    return cfg;
}

void save_run_config(const RunConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("config: cannot write " + path);
    out << cfg.canonical();
}

// ---- binary helpers (little-endian; plain memcpy, host is LE) ----

namespace {

template <typename T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    T v;
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("container: truncated file");
    return v;
}

void put_string(std::ostream& os, const std::string& s) {
    put<uint16_t>(os, static_cast<uint16_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& is) {
    uint16_t n = get<uint16_t>(is);
    std::string s(n, '\0');
    is.read(s.data(), n);
    if (!is) throw std::runtime_error("container: truncated string");
    return s;
}

}  // namespace

void write_corpus(const std::string& path, const std::vector<MotionSequence>& items) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_corpus: cannot open " + path);
    os.write("MLCT", 4);
    put<uint16_t>(os, kFormatVersion);
    put<uint32_t>(os, static_cast<uint32_t>(items.size()));
    for (const auto& item : items) {
        put<uint32_t>(os, item.id);
        put<uint16_t>(os, item.label);
        put<uint16_t>(os, static_cast<uint16_t>(item.frames()));
        put<uint16_t>(os, static_cast<uint16_t>(item.channels()));
        for (int i = 0; i < item.frames(); ++i)
            for (int j = 0; j < item.channels(); ++j)
                put<float>(os, static_cast<float>(item.data(i, j)));
    }
    if (!os) throw std::runtime_error("write_corpus: I/O failure on " + path);
}

std::vector<MotionSequence> read_corpus(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_corpus: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "MLCT", 4) != 0)
        throw std::runtime_error("read_corpus: bad magic in " + path);
    uint16_t ver = get<uint16_t>(is);
    if (ver != kFormatVersion)
        throw std::runtime_error("read_corpus: unsupported version " +
                                 std::to_string(ver));
    uint32_t count = get<uint32_t>(is);
    std::vector<MotionSequence> items(count);
    for (auto& item : items) {
        item.id = get<uint32_t>(is);
        item.label = get<uint16_t>(is);
        uint16_t F = get<uint16_t>(is);
        uint16_t J = get<uint16_t>(is);
        item.data.resize(F, J);
        for (int i = 0; i < F; ++i)
            for (int j = 0; j < J; ++j) item.data(i, j) = get<float>(is);
    }
    return items;
}

void write_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_checkpoint: cannot open " + path);
    os.write("MLCK", 4);
    put<uint16_t>(os, kFormatVersion);
    put<uint64_t>(os, ckpt.config_hash);
    put<uint64_t>(os, ckpt.seed);
    put<uint32_t>(os, static_cast<uint32_t>(ckpt.arrays.size()));
    for (const auto& [name, a] : ckpt.arrays) {
        put_string(os, name);
        put<uint8_t>(os, 0);  // dtype f32
        put<uint8_t>(os, 2);  // ndim
        put<uint32_t>(os, static_cast<uint32_t>(a.rows()));
        put<uint32_t>(os, static_cast<uint32_t>(a.cols()));
    }
    for (const auto& [name, a] : ckpt.arrays)
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            for (Eigen::Index j = 0; j < a.cols(); ++j)
                put<float>(os, static_cast<float>(a(i, j)));
    if (!os) throw std::runtime_error("write_checkpoint: I/O failure on " + path);
}

Checkpoint read_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_checkpoint: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "MLCK", 4) != 0)
        throw std::runtime_error("read_checkpoint: bad magic in " + path);
    uint16_t ver = get<uint16_t>(is);
    if (ver != kFormatVersion)
        throw std::runtime_error("read_checkpoint: version mismatch (" +
                                 std::to_string(ver) + " != " +
                                 std::to_string(kFormatVersion) + ")");
    Checkpoint ckpt;
    ckpt.config_hash = get<uint64_t>(is);
    ckpt.seed = get<uint64_t>(is);
    uint32_t count = get<uint32_t>(is);
    std::vector<std::pair<std::string, std::pair<uint32_t, uint32_t>>> manifest;
    for (uint32_t i = 0; i < count; ++i) {
        std::string name = get_string(is);
        uint8_t dtype = get<uint8_t>(is);
        uint8_t ndim = get<uint8_t>(is);
        if (dtype != 0 || ndim != 2)
            throw std::runtime_error("read_checkpoint: unsupported entry '" + name + "'");
        uint32_t rows = get<uint32_t>(is);
        uint32_t cols = get<uint32_t>(is);
        manifest.push_back({name, {rows, cols}});
    }
    for (const auto& [name, shape] : manifest) {
        Mat a(shape.first, shape.second);
        for (uint32_t i = 0; i < shape.first; ++i)
            for (uint32_t j = 0; j < shape.second; ++j) a(i, j) = get<float>(is);
        ckpt.arrays[name] = std::move(a);
    }
    return ckpt;
}

std::string format_metric_record(const MetricRecord& rec) {
    nlohmann::ordered_json j;
    j["metric"] = rec.metric;
    j["value"] = rec.value;
    j["nfe"] = rec.nfe;
    j["seed"] = rec.seed;
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(rec.config_hash));
    j["config_hash"] = buf;
    return j.dump();
}

void append_metric_records(const std::string& path,
                           const std::vector<MetricRecord>& recs) {
    std::ofstream os(path, std::ios::app);
    if (!os) throw std::runtime_error("metric records: cannot open " + path);
    for (const auto& r : recs) os << format_metric_record(r) << "\n";
}

std::vector<MetricRecord> read_metric_records(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("metric records: cannot open " + path);
    std::vector<MetricRecord> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line);
        MetricRecord r;
        r.metric = j.at("metric").get<std::string>();
        r.value = j.at("value").get<double>();
        r.nfe = j.at("nfe").get<int>();
        r.seed = j.at("seed").get<uint64_t>();
        r.config_hash = std::stoull(j.at("config_hash").get<std::string>(), nullptr, 16);
        out.push_back(std::move(r));
    }
    return out;
}

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

}  // namespace

void write_trajectory_svg(const std::string& path,
                          const std::vector<MotionSequence>& items,
                          int max_items) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("svg: cannot open " + path);
    const int W = 640, H = 360, pad = 20;
    int count = std::min<int>(max_items, static_cast<int>(items.size()));
    double lo = 1e300, hi = -1e300;
    int fmax = 1;
    for (int k = 0; k < count; ++k) {
        Mat pos = joint_transform(items[k].data);
        lo = std::min(lo, pos.minCoeff());
        hi = std::max(hi, pos.maxCoeff());
        fmax = std::max(fmax, items[k].frames());
    }
    if (hi <= lo) hi = lo + 1.0;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\""
       << W << "\" height=\"" << H << "\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (int k = 0; k < count; ++k) {
        Mat pos = joint_transform(items[k].data);
        const char* color = kPalette[items[k].label % 8];
        for (int j = 0; j < pos.cols(); ++j) {
            os << "<polyline fill=\"none\" stroke=\"" << color
               << "\" stroke-opacity=\"0.7\" points=\"";
            for (int i = 0; i < pos.rows(); ++i) {
                double x = pad + (W - 2.0 * pad) * i / std::max(1, fmax - 1);
                double y = H - pad - (H - 2.0 * pad) * (pos(i, j) - lo) / (hi - lo);
                os << x << "," << y << " ";
            }
            os << "\"/>\n";
        }
    }
    os << "</svg>\n";
}

void write_loss_curve_svg(const std::string& path,
                          const std::vector<std::pair<double, double>>& xy,
                          const std::string& title) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("svg: cannot open " + path);
    const int W = 640, H = 360, pad = 30;
    double xlo = 0, xhi = 1, ylo = 0, yhi = 1;
    if (!xy.empty()) {
        xlo = xhi = xy.front().first;
        ylo = yhi = xy.front().second;
        for (auto& [x, y] : xy) {
            xlo = std::min(xlo, x); xhi = std::max(xhi, x);
            ylo = std::min(ylo, y); yhi = std::max(yhi, y);
        }
    }
    if (xhi <= xlo) xhi = xlo + 1;
    if (yhi <= ylo) yhi = ylo + 1;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\""
       << W << "\" height=\"" << H << "\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << "<text x=\"" << pad << "\" y=\"18\" font-family=\"monospace\">" << title
       << "</text>\n<polyline fill=\"none\" stroke=\"#1f77b4\" points=\"";
    for (auto& [x, y] : xy) {
        double px = pad + (W - 2.0 * pad) * (x - xlo) / (xhi - xlo);
        double py = H - pad - (H - 2.0 * pad) * (y - ylo) / (yhi - ylo);
        os << px << "," << py << " ";
    }
    os << "\"/>\n</svg>\n";
}

}  // namespace mlct
