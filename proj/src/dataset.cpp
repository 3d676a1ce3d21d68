#include "mmhcl/dataset.hpp"

#include "mmhcl/errors.hpp"
#include "mmhcl/io.hpp"
#include "mmhcl/numerics.hpp"
#include "mmhcl/rng.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace mmhcl {

namespace {
bool contains(const std::vector<int>& v, int x) {
    return std::find(v.begin(), v.end(), x) != v.end();
}
} // namespace

bool ClassPartition::is_seen_a(int label) const { return contains(seen_a, label); }
bool ClassPartition::is_seen_b(int label) const { return contains(seen_b, label); }

ClassPartition make_partition(int n_classes, std::vector<int> seen_a, std::vector<int> seen_b) {
    require(n_classes >= 2, "partition: need at least 2 classes");
    ClassPartition p;
    p.n_classes = n_classes;
    p.seen_a = std::move(seen_a);
    p.seen_b = std::move(seen_b);
    std::sort(p.seen_a.begin(), p.seen_a.end());
    std::sort(p.seen_b.begin(), p.seen_b.end());
    std::set<int> all;
    for (int c : p.seen_a) {
        require(c >= 0 && c < n_classes, "partition: class index out of range");
        all.insert(c);
    }
    for (int c : p.seen_b) {
        require(c >= 0 && c < n_classes, "partition: class index out of range");
        all.insert(c);
    }
    require(static_cast<int>(all.size()) == n_classes,
            "partition: seen sets must cover every class");
    for (int c = 0; c < n_classes; ++c) {
        if (!p.is_seen_a(c)) p.unseen_a.push_back(c);
        if (!p.is_seen_b(c)) p.unseen_b.push_back(c);
    }
    return p;
}

ClassPartition split_classes(int n_classes, std::uint64_t seed) {
    require(n_classes >= 2, "split_classes: need at least 2 classes");
    std::vector<int> order(static_cast<std::size_t>(n_classes));
    std::iota(order.begin(), order.end(), 0);
    SeededRng rng(mix_seed(seed, 0x7061727469ULL)); // partition stream
    rng.shuffle(order);
    const int half = (n_classes + 1) / 2;
    std::vector<int> seen_a(order.begin(), order.begin() + half);
    std::vector<int> seen_b(order.begin() + half, order.end());
    return make_partition(n_classes, std::move(seen_a), std::move(seen_b));
}

MultimodalSample pad_missing(const MultimodalSample& sample, int d_a, int d_b) {
    MultimodalSample out = sample;
    if (!out.present_a) out.feat_a.assign(static_cast<std::size_t>(d_a), 0.0);
    if (!out.present_b) out.feat_b.assign(static_cast<std::size_t>(d_b), 0.0);
    return out;
}

void validate_dataset(const MmhclDataset& ds) {
    require(ds.d_a > 0 && ds.d_b > 0, "dataset: modality dims must be positive");
    auto check_sample = [&](const MultimodalSample& s, bool is_train) {
        if (!s.present_a && !s.present_b)
            throw load_error("sample " + s.id + ": no modality present");
        if (s.label < 0 || s.label >= ds.partition.n_classes)
            throw load_error("sample " + s.id + ": label out of range");
        if (s.present_a && static_cast<int>(s.feat_a.size()) != ds.d_a)
            throw load_error("sample " + s.id + ": modality A dim mismatch");
        if (s.present_b && static_cast<int>(s.feat_b.size()) != ds.d_b)
            throw load_error("sample " + s.id + ": modality B dim mismatch");
        if (is_train) {
            if (s.present_a && !ds.partition.is_seen_a(s.label))
                throw load_error("training sample " + s.id +
                                 ": modality A present but label not in A's seen classes");
            if (s.present_b && !ds.partition.is_seen_b(s.label))
                throw load_error("training sample " + s.id +
                                 ": modality B present but label not in B's seen classes");
        }
    };
    for (const auto& s : ds.train) check_sample(s, true);
    for (const auto& s : ds.test) check_sample(s, false);
}

void validate_spec(const SyntheticSpec& spec) {
    require(spec.n_classes >= 2, "spec: need at least 2 classes");
    require(spec.d_a >= 1 && spec.d_b >= 1 && spec.d_s >= 1, "spec: dims must be >= 1");
    require(spec.train_per_class >= 1 && spec.test_per_class >= 1,
            "spec: per-class counts must be >= 1");
    require(spec.sigma_a >= 0.0 && spec.sigma_b >= 0.0, "spec: sigma must be >= 0");
    require(spec.rho >= 0.0 && spec.rho <= 1.0, "spec: rho must be in [0, 1]");
}

ClassCatalog make_synthetic_catalog(int n_classes, int d_s, std::uint64_t seed,
                                    int clusters, double cluster_weight, int rank) {
    require(n_classes >= 2 && d_s >= 1, "catalog spec: bad dims");
    require(clusters >= 0 && cluster_weight >= 0.0 && cluster_weight < 1.0,
            "catalog spec: bad cluster parameters");
    require(rank >= 0 && rank <= d_s, "catalog spec: rank out of [0, d_s]");
    const int r = rank == 0 ? d_s : rank;

    // Draw latent coordinates in r dims, then embed into d_s through a
    // fixed orthonormal-ish basis.
    // Exact cluster geometry when the latent dimension allows it: unit
    // cluster directions and unit per-class residuals, all mutually
    // orthogonal, give within-cluster cosines of exactly cluster_weight
    // and zero across clusters. Otherwise fall back to noisy clusters.
    const bool exact_clusters = clusters > 0 && n_classes <= r && n_classes % clusters == 0;
    std::vector<Vec> latents;
    std::vector<Vec> centers;
    std::vector<Vec> ortho; // accumulates directions for Gram-Schmidt
    auto unit_direction = [&](SeededRng& rng) {
        Vec v(static_cast<std::size_t>(r));
        for (double& x : v) x = rng.gaussian();
        for (const Vec& prev : ortho) {
            const double proj = dot(v, prev);
            for (std::size_t j = 0; j < v.size(); ++j) v[j] -= proj * prev[j];
        }
        const double nv = norm2(v);
        for (double& x : v) x /= nv;
        ortho.push_back(v);
        return v;
    };
    std::vector<std::vector<Vec>> residual_dirs; // per cluster, simplex corners
    if (clusters > 0) {
        SeededRng rng(mix_seed(seed, 0x636c7573ULL)); // cluster-center stream
        for (int c = 0; c < clusters; ++c) {
            if (exact_clusters) {
                centers.push_back(unit_direction(rng));
            } else {
                Vec center(static_cast<std::size_t>(r));
                for (double& x : center) x = rng.gaussian();
                centers.push_back(std::move(center));
            }
        }
        if (exact_clusters) {
            // Residuals of an m-member cluster sit at the corners of a
            // regular simplex inside an (m-1)-dimensional subspace of
            // their own: within-cluster cosines are exactly uniform and
            // clusters stay orthogonal, while seen members span most of
            // the residual subspace (what unseen-class recovery needs).
            std::vector<int> members(static_cast<std::size_t>(clusters), 0);
            for (int i = 0; i < n_classes; ++i) ++members[static_cast<std::size_t>(i % clusters)];
            SeededRng rng2(mix_seed(seed, 0x73706c78ULL));
            for (int c = 0; c < clusters; ++c) {
                const int m = members[static_cast<std::size_t>(c)];
                std::vector<Vec> subspace;
                for (int t = 0; t + 1 < m; ++t) subspace.push_back(unit_direction(rng2));
                // corner t of the regular simplex: rows of e_t - 1/m in
                // R^m expressed in the (m-1)-dim subspace via Gram-Schmidt
                std::vector<Vec> corners;
                std::vector<Vec> gs; // orthonormal basis of the sum-zero subspace of R^m
                for (int t = 0; t + 1 < m; ++t) {
                    Vec v(static_cast<std::size_t>(m), 0.0);
                    v[static_cast<std::size_t>(t)] = 1.0;
                    v[static_cast<std::size_t>(t) + 1] = -1.0;
                    for (const Vec& prev : gs) {
                        const double proj = dot(v, prev);
                        for (std::size_t j = 0; j < v.size(); ++j) v[j] -= proj * prev[j];
                    }
                    const double nv = norm2(v);
                    for (double& x : v) x /= nv;
                    gs.push_back(std::move(v));
                }
                for (int t = 0; t < m; ++t) {
                    Vec corner_m(static_cast<std::size_t>(m), -1.0 / m);
                    corner_m[static_cast<std::size_t>(t)] += 1.0;
                    const double nc = norm2(corner_m); // sqrt((m-1)/m)
                    Vec corner(static_cast<std::size_t>(r), 0.0);
                    for (int b = 0; b + 1 < m; ++b) {
                        const double coef = dot(corner_m, gs[static_cast<std::size_t>(b)]) / nc;
                        const Vec& dir = subspace[static_cast<std::size_t>(b)];
                        for (int j = 0; j < r; ++j) corner[static_cast<std::size_t>(j)] += coef * dir[static_cast<std::size_t>(j)];
                    }
                    corners.push_back(std::move(corner));
                }
                residual_dirs.push_back(std::move(corners));
            }
        }
    }
    const double wc = clusters > 0 ? std::sqrt(cluster_weight) : 0.0;
    const double wn = clusters > 0 ? std::sqrt(1.0 - cluster_weight) : 1.0;
    std::vector<int> cluster_rank(static_cast<std::size_t>(clusters > 0 ? clusters : 0), 0);
    for (int i = 0; i < n_classes; ++i) {
        SeededRng rng(mix_seed(seed, 0x656d62ULL, static_cast<std::uint64_t>(i)));
        Vec z(static_cast<std::size_t>(r));
        if (exact_clusters) {
            const int c = i % clusters;
            const Vec& center = centers[static_cast<std::size_t>(c)];
            const Vec& noise =
                residual_dirs[static_cast<std::size_t>(c)][static_cast<std::size_t>(cluster_rank[static_cast<std::size_t>(c)]++)];
            for (int j = 0; j < r; ++j)
                z[static_cast<std::size_t>(j)] =
                    wc * center[static_cast<std::size_t>(j)] + wn * noise[static_cast<std::size_t>(j)];
        } else {
            for (int j = 0; j < r; ++j) {
                double x = wn * rng.gaussian();
                if (clusters > 0)
                    x += wc * centers[static_cast<std::size_t>(i % clusters)][static_cast<std::size_t>(j)];
                z[static_cast<std::size_t>(j)] = x;
            }
        }
        latents.push_back(std::move(z));
    }

    Mat basis(r, d_s); // rows are the subspace directions
    if (r == d_s) {
        for (int i = 0; i < r; ++i) basis(i, i) = 1.0;
    } else {
        SeededRng rng(mix_seed(seed, 0x62617369ULL));
        for (int i = 0; i < r; ++i) {
            // Gram-Schmidt against previous rows
            Vec v(static_cast<std::size_t>(d_s));
            for (double& x : v) x = rng.gaussian();
            for (int p = 0; p < i; ++p) {
                const Vec prev = row_copy(basis, p);
                const double proj = dot(v, prev);
                for (int j = 0; j < d_s; ++j) v[static_cast<std::size_t>(j)] -= proj * prev[static_cast<std::size_t>(j)];
            }
            const double nv = norm2(v);
            for (int j = 0; j < d_s; ++j) basis(i, j) = v[static_cast<std::size_t>(j)] / nv;
        }
    }

    ClassCatalog catalog;
    catalog.embeddings = Mat(n_classes, d_s);
    const double target_norm = std::sqrt(static_cast<double>(d_s));
    for (int i = 0; i < n_classes; ++i) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "class_%02d", i);
        catalog.names.emplace_back(buf);
        Vec emb(static_cast<std::size_t>(d_s), 0.0);
        for (int t = 0; t < r; ++t) {
            const double zt = latents[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)];
            for (int j = 0; j < d_s; ++j) emb[static_cast<std::size_t>(j)] += zt * basis(t, j);
        }
        // fixed norm: cosine ignores it, the feature generator relies on it
        const double ne = norm2(emb);
        for (int j = 0; j < d_s; ++j)
            catalog.embeddings(i, j) = emb[static_cast<std::size_t>(j)] * target_norm / ne;
    }
    validate_catalog(catalog);
    return catalog;
}

namespace {

// Per-entry scale of the class centers. Both center components share it,
// so the noise sigmas are measured against this and set the benchmark
// difficulty.
constexpr double kCenterScale = 0.45;

// Up to this many semantically close class pairs straddling the partition
// get their embedding-difference direction removed from one modality's
// aligned projection (alternating modalities). That modality's two class
// centers coincide, the way near-identical sounds can belong to visually
// distinct classes, so its predictions on the pair are confidently wrong
// while the other modality separates the pair cleanly. This is the
// cross-modal complementarity the fusion stack is meant to exploit.
constexpr int kMaxBlindPairs = 4; // two per modality

// Residual fraction of a blinded direction that still reaches the blind
// modality: its two centers end up confusable instead of identical, so
// its ensemble members disagree there instead of agreeing on the twin.
constexpr double kBlindResidual = 0.3;

// Only genuinely similar pairs qualify for blinding; catalogs without
// sibling structure are left alone.
constexpr double kBlindMinCosine = 0.45;

// Fixed random linear map d_s -> d_m, entries N(0, (scale/sqrt(d_s))^2)
// so the image of a unit-variance embedding has per-entry scale
// kCenterScale.
Mat projection_matrix(int d_m, int d_s, SeededRng& rng) {
    Mat p(d_m, d_s);
    const double scale = kCenterScale / std::sqrt(static_cast<double>(d_s));
    for (double& x : p.data) x = scale * rng.gaussian();
    return p;
}

// All class pairs ordered by descending embedding cosine, greedily made
// disjoint: the "semantic sibling" pairs of the catalog.
std::vector<std::pair<int, int>> similar_pairs(const Mat& embeddings) {
    struct Entry {
        double cos;
        int i, j;
    };
    std::vector<Entry> entries;
    const int n = embeddings.rows;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double c = cosine(row_copy(embeddings, i), row_copy(embeddings, j));
            entries.push_back({c, i, j});
        }
    }
    std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        if (a.cos != b.cos) return a.cos > b.cos;
        return a.i != b.i ? a.i < b.i : a.j < b.j;
    });
    std::vector<bool> used(static_cast<std::size_t>(n), false);
    std::vector<std::pair<int, int>> pairs;
    for (const Entry& e : entries) {
        if (used[static_cast<std::size_t>(e.i)] || used[static_cast<std::size_t>(e.j)]) continue;
        used[static_cast<std::size_t>(e.i)] = true;
        used[static_cast<std::size_t>(e.j)] = true;
        pairs.emplace_back(e.i, e.j);
    }
    return pairs;
}

Vec visible_part(const Vec& embedding, const std::vector<Vec>& blind) {
    Vec v = embedding;
    for (const Vec& b : blind) {
        const double proj = (1.0 - kBlindResidual) * dot(v, b);
        for (std::size_t j = 0; j < v.size(); ++j) v[j] -= proj * b[j];
    }
    return v;
}

// Free class-specific component at the same per-entry scale as the
// aligned part.
constexpr double kFreeComponentScale = kCenterScale;

Vec class_center(const Mat& proj, const Vec& embedding, double rho, SeededRng& g_rng) {
    const int d_m = proj.rows;
    Vec center(static_cast<std::size_t>(d_m), 0.0);
    for (int i = 0; i < d_m; ++i) {
        double lin = 0.0;
        for (int j = 0; j < proj.cols; ++j) lin += proj(i, j) * embedding[static_cast<std::size_t>(j)];
        center[static_cast<std::size_t>(i)] =
            rho * lin + (1.0 - rho) * kFreeComponentScale * g_rng.gaussian();
    }
    return center;
}

Vec noisy_copy(const Vec& center, double sigma, SeededRng& rng) {
    Vec out = center;
    if (sigma > 0.0)
        for (double& x : out) x += sigma * rng.gaussian();
    return out;
}

std::string sample_id(const char* split, const char* pattern, int label, int index) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s-%s-c%02d-%04d", split, pattern, label, index);
    return buf;
}

} // namespace

ClassCatalog make_benchmark_catalog(int n_classes, int d_s, std::uint64_t seed, int families,
                                    int family_size, double family_weight, int free_rank) {
    require(n_classes >= 2 && d_s >= 1, "benchmark catalog: bad dims");
    require(families >= 0 && family_size >= 2, "benchmark catalog: bad family shape");
    require(family_weight > 0.0 && family_weight < 1.0, "benchmark catalog: weight in (0,1)");
    const int family_classes = families * family_size;
    const int free_classes = n_classes - family_classes;
    require(free_classes >= 0, "benchmark catalog: families exceed the class count");
    require(free_rank >= 1, "benchmark catalog: free_rank must be >= 1");
    const int dims_needed = families * family_size + free_rank; // center + (size-1) each
    require(dims_needed <= d_s, "benchmark catalog: structure does not fit in d_s");

    // orthonormal direction pool
    std::vector<Vec> pool;
    SeededRng dir_rng(mix_seed(seed, 0x64697273ULL));
    auto next_dir = [&]() {
        Vec v(static_cast<std::size_t>(d_s));
        for (double& x : v) x = dir_rng.gaussian();
        for (const Vec& prev : pool) {
            const double proj = dot(v, prev);
            for (std::size_t j = 0; j < v.size(); ++j) v[j] -= proj * prev[j];
        }
        const double nv = norm2(v);
        for (double& x : v) x /= nv;
        pool.push_back(v);
        return v;
    };

    ClassCatalog catalog;
    catalog.embeddings = Mat(n_classes, d_s);
    for (int i = 0; i < n_classes; ++i) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "class_%02d", i);
        catalog.names.emplace_back(buf);
    }

    const double wc = std::sqrt(family_weight);
    const double wn = std::sqrt(1.0 - family_weight);
    int next_class = 0;
    for (int f = 0; f < families; ++f) {
        const Vec center = next_dir();
        std::vector<Vec> subspace;
        for (int t = 0; t + 1 < family_size; ++t) subspace.push_back(next_dir());
        // orthonormal basis of the sum-zero subspace of R^family_size
        std::vector<Vec> gs;
        for (int t = 0; t + 1 < family_size; ++t) {
            Vec v(static_cast<std::size_t>(family_size), 0.0);
            v[static_cast<std::size_t>(t)] = 1.0;
            v[static_cast<std::size_t>(t) + 1] = -1.0;
            for (const Vec& prev : gs) {
                const double proj = dot(v, prev);
                for (std::size_t j = 0; j < v.size(); ++j) v[j] -= proj * prev[j];
            }
            const double nv = norm2(v);
            for (double& x : v) x /= nv;
            gs.push_back(std::move(v));
        }
        for (int t = 0; t < family_size; ++t) {
            // regular simplex corner t, unit norm
            Vec corner_m(static_cast<std::size_t>(family_size), -1.0 / family_size);
            corner_m[static_cast<std::size_t>(t)] += 1.0;
            const double nc = norm2(corner_m);
            Vec emb(static_cast<std::size_t>(d_s), 0.0);
            for (int j = 0; j < d_s; ++j) emb[static_cast<std::size_t>(j)] = wc * center[static_cast<std::size_t>(j)];
            for (int b = 0; b + 1 < family_size; ++b) {
                const double coef = wn * dot(corner_m, gs[static_cast<std::size_t>(b)]) / nc;
                for (int j = 0; j < d_s; ++j)
                    emb[static_cast<std::size_t>(j)] += coef * subspace[static_cast<std::size_t>(b)][static_cast<std::size_t>(j)];
            }
            set_row(catalog.embeddings, next_class++, emb);
        }
    }
    // Free classes get their own subspace: sharing dimensions with the
    // families lets the family-discrimination gains distort free-class
    // recovery. Seen free classes span most of the subspace (what the
    // recovery transfer needs); resampling keeps pairwise free cosines
    // moderate so no trained neighbour captures an unseen class outright.
    std::vector<Vec> free_dirs;
    for (int t = 0; t < free_rank; ++t) free_dirs.push_back(next_dir());
    constexpr double kFreeMaxCosine = 0.38;
    std::vector<Vec> accepted;
    for (int i = 0; i < free_classes; ++i) {
        SeededRng rng(mix_seed(seed, 0x66726565ULL, static_cast<std::uint64_t>(i)));
        const int free_dims = static_cast<int>(free_dirs.size());
        Vec coords(static_cast<std::size_t>(free_dims));
        for (int attempt = 0; attempt < 3000; ++attempt) {
            for (double& x : coords) x = rng.gaussian();
            bool ok = true;
            for (const Vec& other : accepted) {
                double num = 0.0, na = 0.0, nb = 0.0;
                for (int t = 0; t < free_dims; ++t) {
                    num += coords[static_cast<std::size_t>(t)] * other[static_cast<std::size_t>(t)];
                    na += coords[static_cast<std::size_t>(t)] * coords[static_cast<std::size_t>(t)];
                    nb += other[static_cast<std::size_t>(t)] * other[static_cast<std::size_t>(t)];
                }
                if (std::fabs(num) / std::sqrt(na * nb) > kFreeMaxCosine) {
                    ok = false;
                    break;
                }
            }
            if (ok) break;
        }
        accepted.push_back(coords);
        Vec emb(static_cast<std::size_t>(d_s), 0.0);
        for (int t = 0; t < free_dims; ++t) {
            const double c = coords[static_cast<std::size_t>(t)];
            const Vec& dir = free_dirs[static_cast<std::size_t>(t)];
            for (int j = 0; j < d_s; ++j) emb[static_cast<std::size_t>(j)] += c * dir[static_cast<std::size_t>(j)];
        }
        set_row(catalog.embeddings, next_class++, emb);
    }

    const double target_norm = std::sqrt(static_cast<double>(d_s));
    for (int i = 0; i < n_classes; ++i) {
        double sq = 0.0;
        for (int j = 0; j < d_s; ++j) sq += catalog.embeddings(i, j) * catalog.embeddings(i, j);
        const double scale = target_norm / std::sqrt(sq);
        for (int j = 0; j < d_s; ++j) catalog.embeddings(i, j) *= scale;
    }
    validate_catalog(catalog);
    return catalog;
}

MmhclDataset synthesize(const SyntheticSpec& spec, const ClassCatalog& catalog) {
    validate_spec(spec);
    require(catalog.size() == spec.n_classes, "synthesize: catalog size != spec.n_classes");
    require(catalog.dim() == spec.d_s, "synthesize: catalog dim != spec.d_s");

    MmhclDataset ds;
    ds.d_a = spec.d_a;
    ds.d_b = spec.d_b;
    ds.seed = spec.seed;
    ds.partition = split_classes(spec.n_classes, spec.seed);

    SeededRng proj_rng_a(mix_seed(spec.seed, 0x70726f6aULL, 0));
    SeededRng proj_rng_b(mix_seed(spec.seed, 0x70726f6aULL, 1));
    const Mat proj_a = projection_matrix(spec.d_a, spec.d_s, proj_rng_a);
    const Mat proj_b = projection_matrix(spec.d_b, spec.d_s, proj_rng_b);

    std::vector<Vec> blind_a, blind_b;
    int assigned = 0;
    for (const auto& [i, j] : similar_pairs(catalog.embeddings)) {
        if (assigned >= kMaxBlindPairs) break;
        if (cosine(row_copy(catalog.embeddings, i), row_copy(catalog.embeddings, j)) <
            kBlindMinCosine)
            break; // pairs are ordered by similarity
        if (ds.partition.is_seen_a(i) == ds.partition.is_seen_a(j)) continue; // not straddled
        Vec d(static_cast<std::size_t>(spec.d_s));
        for (int t = 0; t < spec.d_s; ++t)
            d[static_cast<std::size_t>(t)] = catalog.embeddings(i, t) - catalog.embeddings(j, t);
        std::vector<Vec>& target = assigned % 2 == 0 ? blind_a : blind_b;
        for (const Vec& prev : target) {
            const double proj = dot(d, prev);
            for (std::size_t t = 0; t < d.size(); ++t) d[t] -= proj * prev[t];
        }
        const double nd = norm2(d);
        if (nd < 1e-12) continue;
        for (double& x : d) x /= nd;
        target.push_back(std::move(d));
        ++assigned;
    }

    std::vector<Vec> centers_a, centers_b;
    for (int c = 0; c < spec.n_classes; ++c) {
        const Vec emb = row_copy(catalog.embeddings, c);
        SeededRng ga(mix_seed(spec.seed, 0x6743cf01ULL, static_cast<std::uint64_t>(c)));
        SeededRng gb(mix_seed(spec.seed, 0x6743cf02ULL, static_cast<std::uint64_t>(c)));
        centers_a.push_back(class_center(proj_a, visible_part(emb, blind_a), spec.rho, ga));
        centers_b.push_back(class_center(proj_b, visible_part(emb, blind_b), spec.rho, gb));
    }

    // Training stream: each class only in the modality that sees it.
    for (int c = 0; c < spec.n_classes; ++c) {
        SeededRng rng(mix_seed(spec.seed, 0x747261696eULL, static_cast<std::uint64_t>(c)));
        for (int i = 0; i < spec.train_per_class; ++i) {
            MultimodalSample s;
            s.label = c;
            if (ds.partition.is_seen_a(c)) {
                s.id = sample_id("train", "a", c, i);
                s.present_a = true;
                s.feat_a = noisy_copy(centers_a[static_cast<std::size_t>(c)], spec.sigma_a, rng);
            }
            if (ds.partition.is_seen_b(c)) {
                if (s.id.empty()) s.id = sample_id("train", "b", c, i);
                s.present_b = true;
                s.feat_b = noisy_copy(centers_b[static_cast<std::size_t>(c)], spec.sigma_b, rng);
            }
            ds.train.push_back(std::move(s));
        }
    }

    // Test stream: every class under every presence pattern, equal counts.
    for (int c = 0; c < spec.n_classes; ++c) {
        SeededRng rng(mix_seed(spec.seed, 0x74657374ULL, static_cast<std::uint64_t>(c)));
        for (int i = 0; i < spec.test_per_class; ++i) {
            MultimodalSample s;
            s.label = c;
            s.id = sample_id("test", "a", c, i);
            s.present_a = true;
            s.feat_a = noisy_copy(centers_a[static_cast<std::size_t>(c)], spec.sigma_a, rng);
            ds.test.push_back(std::move(s));
        }
        for (int i = 0; i < spec.test_per_class; ++i) {
            MultimodalSample s;
            s.label = c;
            s.id = sample_id("test", "b", c, i);
            s.present_b = true;
            s.feat_b = noisy_copy(centers_b[static_cast<std::size_t>(c)], spec.sigma_b, rng);
            ds.test.push_back(std::move(s));
        }
        for (int i = 0; i < spec.test_per_class; ++i) {
            MultimodalSample s;
            s.label = c;
            s.id = sample_id("test", "ab", c, i);
            s.present_a = true;
            s.present_b = true;
            s.feat_a = noisy_copy(centers_a[static_cast<std::size_t>(c)], spec.sigma_a, rng);
            s.feat_b = noisy_copy(centers_b[static_cast<std::size_t>(c)], spec.sigma_b, rng);
            ds.test.push_back(std::move(s));
        }
    }

    validate_dataset(ds);
    return ds;
}

namespace {

struct RawRow {
    std::string id;
    std::string label; // may be empty when labels come from the side file
    Vec values;
};

std::vector<RawRow> read_feature_file(const std::string& path, int* dim_out) {
    std::istringstream in(read_text_file(path));
    std::string line;
    if (!std::getline(in, line)) throw load_error(path + ": empty file");
    const auto header = split_csv_line(line);
    if (header.size() < 3 || header[0] != "id" || header[1] != "label")
        throw load_error(path + ": expected header 'id,label,f0,...'");
    const int dim = static_cast<int>(header.size()) - 2;
    std::vector<RawRow> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        const std::string where = path + " line " + std::to_string(lineno);
        if (static_cast<int>(fields.size()) != dim + 2)
            throw load_error(where + ": expected " + std::to_string(dim + 2) + " fields, got " +
                             std::to_string(fields.size()));
        RawRow row;
        row.id = fields[0];
        row.label = fields[1];
        if (row.id.empty()) throw load_error(where + ": empty id");
        for (int j = 0; j < dim; ++j)
            row.values.push_back(parse_double(fields[static_cast<std::size_t>(j) + 2], where));
        rows.push_back(std::move(row));
    }
    *dim_out = dim;
    return rows;
}

bool split_of_id(const std::string& id, const std::string& path, bool* is_train) {
    const auto dash = id.find('-');
    const std::string tag = dash == std::string::npos ? id : id.substr(0, dash);
    if (tag == "train") {
        *is_train = true;
        return true;
    }
    if (tag == "test") {
        *is_train = false;
        return true;
    }
    throw load_error(path + ": sample id '" + id +
                     "' lacks the train-/test- split tag prefix");
}

} // namespace

MmhclDataset load_features(const std::string& path_a, const std::string& path_b,
                           const std::string& labels_path, const ClassPartition& partition) {
    MmhclDataset ds;
    ds.partition = partition;
    auto rows_a = read_feature_file(path_a, &ds.d_a);
    auto rows_b = read_feature_file(path_b, &ds.d_b);

    std::map<std::string, int> side_labels;
    if (!labels_path.empty()) {
        std::istringstream in(read_text_file(labels_path));
        std::string line;
        if (!std::getline(in, line) || split_csv_line(line) != std::vector<std::string>{"id", "label"})
            throw load_error(labels_path + ": expected header 'id,label'");
        int lineno = 1;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            const auto fields = split_csv_line(line);
            const std::string where = labels_path + " line " + std::to_string(lineno);
            if (fields.size() != 2) throw load_error(where + ": expected 2 fields");
            if (!side_labels.emplace(fields[0], static_cast<int>(parse_long(fields[1], where))).second)
                throw load_error(where + ": duplicate id '" + fields[0] + "'");
        }
    }

    auto resolve_label = [&](const RawRow& row, const std::string& path) -> int {
        if (!row.label.empty()) {
            const int embedded = static_cast<int>(parse_long(row.label, path + " id " + row.id));
            const auto it = side_labels.find(row.id);
            if (it != side_labels.end() && it->second != embedded)
                throw load_error("id " + row.id + ": embedded label " + std::to_string(embedded) +
                                 " conflicts with labels file (" + std::to_string(it->second) + ")");
            return embedded;
        }
        const auto it = side_labels.find(row.id);
        if (it == side_labels.end())
            throw load_error(path + " id " + row.id + ": no label (empty field, not in labels file)");
        return it->second;
    };

    std::map<std::string, MultimodalSample> merged;
    std::vector<std::string> order; // keep file order, A rows first
    for (const RawRow& row : rows_a) {
        MultimodalSample s;
        s.id = row.id;
        s.label = resolve_label(row, path_a);
        s.present_a = true;
        s.feat_a = row.values;
        if (!merged.emplace(row.id, std::move(s)).second)
            throw load_error(path_a + ": duplicate id '" + row.id + "'");
        order.push_back(row.id);
    }
    for (const RawRow& row : rows_b) {
        const int label = resolve_label(row, path_b);
        auto it = merged.find(row.id);
        if (it == merged.end()) {
            MultimodalSample s;
            s.id = row.id;
            s.label = label;
            s.present_b = true;
            s.feat_b = row.values;
            merged.emplace(row.id, std::move(s));
            order.push_back(row.id);
        } else {
            if (it->second.present_b)
                throw load_error(path_b + ": duplicate id '" + row.id + "'");
            if (it->second.label != label)
                throw load_error("id " + row.id + ": label mismatch between modality files (" +
                                 std::to_string(it->second.label) + " vs " + std::to_string(label) + ")");
            it->second.present_b = true;
            it->second.feat_b = row.values;
        }
    }

    for (const std::string& id : order) {
        MultimodalSample& s = merged.at(id);
        bool is_train = false;
        split_of_id(id, path_a, &is_train);
        if (is_train)
            ds.train.push_back(std::move(s));
        else
            ds.test.push_back(std::move(s));
    }
    validate_dataset(ds);
    return ds;
}

void save_features(const MmhclDataset& ds, const std::string& path_a, const std::string& path_b) {
    std::ostringstream out_a, out_b;
    out_a << "id,label";
    for (int j = 0; j < ds.d_a; ++j) out_a << ",f" << j;
    out_a << "\n";
    out_b << "id,label";
    for (int j = 0; j < ds.d_b; ++j) out_b << ",f" << j;
    out_b << "\n";
    auto emit = [&](const MultimodalSample& s) {
        if (s.id.find(',') != std::string::npos)
            throw std::invalid_argument("save_features: id contains a comma: " + s.id);
        if (s.present_a) {
            out_a << s.id << "," << s.label;
            for (double x : s.feat_a) out_a << "," << format_double(x);
            out_a << "\n";
        }
        if (s.present_b) {
            out_b << s.id << "," << s.label;
            for (double x : s.feat_b) out_b << "," << format_double(x);
            out_b << "\n";
        }
    };
    for (const auto& s : ds.train) emit(s);
    for (const auto& s : ds.test) emit(s);
    write_text_file(path_a, out_a.str());
    write_text_file(path_b, out_b.str());
}

const char* scenario_name(Scenario s) {
    switch (s) {
        case Scenario::SeenA: return "A_s";
        case Scenario::SeenB: return "B_s";
        case Scenario::UnseenA: return "A_u";
        case Scenario::UnseenB: return "B_u";
        case Scenario::SeenAUnseenB: return "A_s+B_u";
        case Scenario::UnseenASeenB: return "A_u+B_s";
        case Scenario::AllAll: return "A_all+B_all";
        case Scenario::Mix: return "mix";
    }
    return "?";
}

EvalScenarios make_eval_scenarios(const MmhclDataset& ds) {
    require(!ds.test.empty(), "make_eval_scenarios: empty test split");
    EvalScenarios out;
    auto add = [&](Scenario s, int idx) {
        out.members[static_cast<std::size_t>(s)].push_back(idx);
    };
    for (int i = 0; i < static_cast<int>(ds.test.size()); ++i) {
        const MultimodalSample& s = ds.test[static_cast<std::size_t>(i)];
        const bool seen_a = ds.partition.is_seen_a(s.label);
        const bool seen_b = ds.partition.is_seen_b(s.label);
        bool in_mix = false;
        if (s.present_a && !s.present_b) {
            add(seen_a ? Scenario::SeenA : Scenario::UnseenA, i);
            in_mix = true;
        } else if (s.present_b && !s.present_a) {
            add(seen_b ? Scenario::SeenB : Scenario::UnseenB, i);
            in_mix = true;
        } else if (s.present_a && s.present_b) {
            add(Scenario::AllAll, i);
            if (seen_a && !seen_b) {
                add(Scenario::SeenAUnseenB, i);
                in_mix = true;
            } else if (!seen_a && seen_b) {
                add(Scenario::UnseenASeenB, i);
                in_mix = true;
            }
        }
        if (in_mix) add(Scenario::Mix, i);
    }
    for (int s = 0; s < kScenarioCount; ++s) {
        if (out.members[static_cast<std::size_t>(s)].empty())
            out.warnings.push_back(std::string("scenario ") + scenario_name(static_cast<Scenario>(s)) +
                                   " is empty and will be excluded from averages");
    }
    return out;
}

} // namespace mmhcl
