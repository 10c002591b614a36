#include "texir/irradiance.hpp"

#include <cmath>
#include <cstring>
#include <deque>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "texir/brdf.hpp"
#include "texir/parallel.hpp"
#include "texir/rng.hpp"

namespace texir {

using std::numbers::pi;

Vec3 IrradianceTexture::query(double u, double v) const {
    return texture.sample(u, v);
}

namespace {

Vec3 oriented_cosine_sample(const Frame& frame, double u1, double u2) {
    Vec3 local;
    double pdf;
    brdf::sample_cosine(u1, u2, local, pdf);
    return frame.to_world(local);
}

// Fills uncovered texels with the nearest covered value (BFS) so plain
// bilinear sampling stays valid across coverage boundaries.
void fill_uncovered(TextureImage& tex, const MaskImage& coverage) {
    int w = tex.width, h = tex.height;
    std::vector<int> dist(size_t(w) * h, -1);
    std::deque<std::pair<int, int>> queue;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (coverage.at(x, y)) {
                dist[size_t(y) * w + x] = 0;
                queue.emplace_back(x, y);
            }
    while (!queue.empty()) {
        auto [x, y] = queue.front();
        queue.pop_front();
        int d = dist[size_t(y) * w + x];
        const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
            int nx = x + dx[k], ny = y + dy[k];
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            if (dist[size_t(ny) * w + nx] >= 0) continue;
            dist[size_t(ny) * w + nx] = d + 1;
            tex.set_pixel(nx, ny, tex.pixel(x, y));
            queue.emplace_back(nx, ny);
        }
    }
}

}  // namespace

Vec3 gather_irradiance(const TblLight& tbl, const Vec3& position, const Vec3& normal,
                       int n_samples, uint64_t seed, uint64_t stream) {
    Rng rng(seed, stream);
    Frame frame(normal);
    int grid = std::max(1, int(std::floor(std::sqrt(double(n_samples)))));
    Vec3 sum{0, 0, 0};
    for (int s = 0; s < n_samples; ++s) {
        double u1, u2;
        if (s < grid * grid) {
            // stratified over a grid, jittered
            int cx = s % grid, cy = s / grid;
            u1 = (cx + rng.next_double()) / grid;
            u2 = (cy + rng.next_double()) / grid;
        } else {
            u1 = rng.next_double();
            u2 = rng.next_double();
        }
        Vec3 omega = oriented_cosine_sample(frame, u1, u2);
        sum += tbl.query_radiance(position, omega);
    }
    return sum * (pi / n_samples);
}

IrradianceTexture bake_irt(const std::vector<Surfel>& surfels, const TblLight& tbl,
                           int res, int n_samples, uint64_t seed) {
    if (surfels.empty()) throw std::runtime_error("bake_irt: no surfels to bake");
    IrradianceTexture irt;
    irt.texture = TextureImage(res, res, 3, 0.0);
    irt.coverage = MaskImage(res, res, 0);
    irt.sample_count = n_samples;

    parallel_for(surfels.size(), [&](size_t i) {
        const Surfel& s = surfels[i];
        uint64_t stream = uint64_t(s.y) * uint64_t(res) + uint64_t(s.x);
        Vec3 ir = gather_irradiance(tbl, s.position, s.normal, n_samples, seed, stream);
        irt.texture.set_pixel(s.x, s.y, ir);
    });
    for (const Surfel& s : surfels) irt.coverage.at(s.x, s.y) = 1;
    fill_uncovered(irt.texture, irt.coverage);
    return irt;
}

// ---------------------------------------------------------------------------
// NIrF

namespace {

void encode_position(const Nirf& net, const Vec3& p, double* out) {
    Vec3 ext = net.box_hi - net.box_lo;
    double q[3] = {
        ext.x > 0 ? 2.0 * (p.x - net.box_lo.x) / ext.x - 1.0 : 0.0,
        ext.y > 0 ? 2.0 * (p.y - net.box_lo.y) / ext.y - 1.0 : 0.0,
        ext.z > 0 ? 2.0 * (p.z - net.box_lo.z) / ext.z - 1.0 : 0.0,
    };
    int o = 0;
    for (int d = 0; d < 3; ++d) out[o++] = q[d];
    for (int b = 0; b < Nirf::kBands; ++b) {
        double f = pi * double(1 << b);
        for (int d = 0; d < 3; ++d) {
            out[o++] = std::sin(f * q[d]);
            out[o++] = std::cos(f * q[d]);
        }
    }
}

double softplus(double x) {
    return x > 20 ? x : std::log1p(std::exp(x));
}
double softplus_deriv(double x) {
    return 1.0 / (1.0 + std::exp(-x));
}

struct ForwardTrace {
    // pre-activations per layer, plus input encoding
    std::vector<double> input;
    std::vector<std::vector<double>> pre;   // one per layer incl. output
    std::vector<std::vector<double>> post;  // activated
};

void forward_trace(const Nirf& net, const Vec3& p, ForwardTrace& tr) {
    tr.input.resize(Nirf::kInput);
    encode_position(net, p, tr.input.data());
    size_t n_layers = net.weights.size();
    tr.pre.resize(n_layers);
    tr.post.resize(n_layers);
    const std::vector<double>* prev = &tr.input;
    for (size_t l = 0; l < n_layers; ++l) {
        size_t n_out = net.biases[l].size();
        size_t n_in = prev->size();
        tr.pre[l].assign(n_out, 0.0);
        tr.post[l].assign(n_out, 0.0);
        for (size_t o = 0; o < n_out; ++o) {
            double acc = net.biases[l][o];
            const double* wrow = &net.weights[l][o * n_in];
            for (size_t i = 0; i < n_in; ++i) acc += wrow[i] * (*prev)[i];
            tr.pre[l][o] = acc;
            tr.post[l][o] = softplus(acc);
        }
        prev = &tr.post[l];
    }
}

}  // namespace

Vec3 Nirf::forward(const Vec3& position) const {
    ForwardTrace tr;
    forward_trace(*this, position, tr);
    const auto& out = tr.post.back();
    return {out[0], out[1], out[2]};
}

Nirf nirf_init(const Vec3& box_lo, const Vec3& box_hi, uint64_t seed) {
    Nirf net;
    net.box_lo = box_lo;
    net.box_hi = box_hi;
    const int sizes[] = {Nirf::kInput, Nirf::kHidden, Nirf::kHidden, Nirf::kHidden, 3};
    Rng rng(seed, 0xa11ce);
    for (int l = 0; l < Nirf::kLayers + 1; ++l) {
        int n_in = sizes[l], n_out = sizes[l + 1];
        double scale = std::sqrt(2.0 / n_in);
        std::vector<double> w(size_t(n_out) * n_in);
        for (double& x : w) {
            // Box-Muller normal
            double u1 = std::max(1e-12, rng.next_double());
            double u2 = rng.next_double();
            x = scale * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * pi * u2);
        }
        net.weights.push_back(std::move(w));
        net.biases.emplace_back(size_t(n_out), 0.0);
    }
    return net;
}

std::vector<double*> nirf_param_refs(Nirf& net) {
    std::vector<double*> refs;
    for (size_t l = 0; l < net.weights.size(); ++l) {
        for (double& w : net.weights[l]) refs.push_back(&w);
        for (double& b : net.biases[l]) refs.push_back(&b);
    }
    return refs;
}

double nirf_loss(const Nirf& net, const std::vector<NirfSample>& batch) {
    double loss = 0;
    for (const NirfSample& s : batch) {
        Vec3 out = net.forward(s.position);
        for (int c = 0; c < 3; ++c) {
            double d = std::log1p(out[c]) - std::log1p(std::max(0.0, s.irradiance[c]));
            loss += d * d;
        }
    }
    return loss / (3.0 * double(batch.size()));
}

std::vector<double> nirf_loss_gradient(const Nirf& net, const std::vector<NirfSample>& batch) {
    size_t n_params = 0;
    for (size_t l = 0; l < net.weights.size(); ++l)
        n_params += net.weights[l].size() + net.biases[l].size();
    std::vector<double> grad(n_params, 0.0);

    ForwardTrace tr;
    for (const NirfSample& s : batch) {
        forward_trace(net, s.position, tr);
        size_t n_layers = net.weights.size();
        // dLoss/d(post of output)
        std::vector<double> delta(3);
        for (int c = 0; c < 3; ++c) {
            double out = tr.post.back()[size_t(c)];
            double d = std::log1p(out) - std::log1p(std::max(0.0, s.irradiance[c]));
            delta[size_t(c)] = 2.0 * d / (1.0 + out) / (3.0 * double(batch.size()));
        }
        // backward through layers
        size_t offset = n_params;
        for (size_t l = n_layers; l-- > 0;) {
            const std::vector<double>& in = l == 0 ? tr.input : tr.post[l - 1];
            size_t n_out = net.biases[l].size();
            size_t n_in = in.size();
            offset -= net.weights[l].size() + net.biases[l].size();
            // delta currently holds dLoss/d(post[l]); convert to pre
            std::vector<double> dpre(n_out);
            for (size_t o = 0; o < n_out; ++o)
                dpre[o] = delta[o] * softplus_deriv(tr.pre[l][o]);
            double* gw = &grad[offset];
            double* gb = &grad[offset + net.weights[l].size()];
            for (size_t o = 0; o < n_out; ++o) {
                for (size_t i = 0; i < n_in; ++i) gw[o * n_in + i] += dpre[o] * in[i];
                gb[o] += dpre[o];
            }
            if (l > 0) {
                std::vector<double> next(n_in, 0.0);
                for (size_t o = 0; o < n_out; ++o) {
                    const double* wrow = &net.weights[l][o * n_in];
                    for (size_t i = 0; i < n_in; ++i) next[i] += dpre[o] * wrow[i];
                }
                delta = std::move(next);
            }
        }
    }
    return grad;
}

NirfTrainResult train_nirf(const std::vector<NirfSample>& samples, const NirfTrainConfig& config) {
    if (samples.empty()) throw std::runtime_error("train_nirf: empty sample set");
    Vec3 lo(1e30), hi(-1e30);
    for (const NirfSample& s : samples) {
        lo = min(lo, s.position);
        hi = max(hi, s.position);
    }
    Nirf net = nirf_init(lo, hi, config.seed);
    auto params = nirf_param_refs(net);
    std::vector<double> m(params.size(), 0.0), v(params.size(), 0.0);
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    long step = 0;

    std::vector<size_t> order(samples.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle_rng(config.seed, 0x5817);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        // Fisher-Yates with the deterministic stream
        for (size_t i = order.size(); i > 1; --i) {
            size_t j = shuffle_rng.next_u64() % i;
            std::swap(order[i - 1], order[j]);
        }
        for (size_t start = 0; start < samples.size(); start += size_t(config.batch_size)) {
            std::vector<NirfSample> batch;
            for (size_t i = start; i < std::min(samples.size(), start + size_t(config.batch_size)); ++i)
                batch.push_back(samples[order[i]]);
            std::vector<double> grad = nirf_loss_gradient(net, batch);
            ++step;
            double c1 = 1.0 - std::pow(b1, double(step));
            double c2 = 1.0 - std::pow(b2, double(step));
            for (size_t i = 0; i < params.size(); ++i) {
                if (!std::isfinite(grad[i]))
                    throw std::runtime_error("NIrF training diverged at epoch " + std::to_string(epoch));
                m[i] = b1 * m[i] + (1 - b1) * grad[i];
                v[i] = b2 * v[i] + (1 - b2) * grad[i] * grad[i];
                *params[i] -= config.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
            }
        }
    }
    NirfTrainResult result{std::move(net), 0.0};
    result.final_loss = nirf_loss(result.net, samples);
    if (!std::isfinite(result.final_loss))
        throw std::runtime_error("NIrF training diverged (non-finite final loss)");
    return result;
}

// Flat little-endian float file: 16-byte header (magic "NIRF", layer
// count, hidden width, input size), then box, then weights and biases in
// layer order.
void Nirf::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    uint32_t header[4] = {0x4652494e, uint32_t(weights.size()), kHidden, kInput};
    out.write(reinterpret_cast<const char*>(header), 16);
    auto put = [&](double d) {
        float f = float(d);
        out.write(reinterpret_cast<const char*>(&f), 4);
    };
    for (const Vec3& b : {box_lo, box_hi}) {
        put(b.x); put(b.y); put(b.z);
    }
    for (size_t l = 0; l < weights.size(); ++l) {
        for (double w : weights[l]) put(w);
        for (double b : biases[l]) put(b);
    }
}

Nirf Nirf::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    uint32_t header[4];
    in.read(reinterpret_cast<char*>(header), 16);
    if (!in || header[0] != 0x4652494e) throw std::runtime_error(path + ": not a NIrF weight file");
    auto get = [&]() {
        float f;
        in.read(reinterpret_cast<char*>(&f), 4);
        if (!in) throw std::runtime_error(path + ": truncated NIrF weight file");
        return double(f);
    };
    Nirf net;
    net.box_lo = {get(), get(), get()};
    net.box_hi = {get(), get(), get()};
    const int sizes[] = {kInput, kHidden, kHidden, kHidden, 3};
    for (uint32_t l = 0; l < header[1]; ++l) {
        int n_in = sizes[l], n_out = sizes[l + 1];
        std::vector<double> w(size_t(n_out) * n_in);
        for (double& x : w) x = get();
        std::vector<double> b(size_t(n_out), 0.0);
        for (double& x : b) x = get();
        net.weights.push_back(std::move(w));
        net.biases.push_back(std::move(b));
    }
    return net;
}

}  // namespace texir
