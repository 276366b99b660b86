#include "ttdensity/tt.hpp"

#include "ttdensity/errors.hpp"
#include "ttdensity/rng.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace ttdensity {

namespace {

/// Left unfolding: (r0 * n) x r1, rows grouped as (k0, j) -> k0 + r0 * j.
Matrix left_unfold(const ExtendedTT::Core& core) {
    const auto r0 = core[0].rows(), r1 = core[0].cols();
    const auto n = static_cast<Eigen::Index>(core.size());
    Matrix A(r0 * n, r1);
    for (Eigen::Index j = 0; j < n; ++j) A.middleRows(j * r0, r0) = core[j];
    return A;
}

ExtendedTT::Core fold_left(const Matrix& A, Eigen::Index r0, Eigen::Index n) {
    ExtendedTT::Core core(n);
    for (Eigen::Index j = 0; j < n; ++j) core[j] = A.middleRows(j * r0, r0);
    return core;
}

/// Right unfolding: r0 x (n * r1), columns grouped as (j, k1) -> j * r1 + k1.
Matrix right_unfold(const ExtendedTT::Core& core) {
    const auto r0 = core[0].rows(), r1 = core[0].cols();
    const auto n = static_cast<Eigen::Index>(core.size());
    Matrix A(r0, n * r1);
    for (Eigen::Index j = 0; j < n; ++j) A.middleCols(j * r1, r1) = core[j];
    return A;
}

ExtendedTT::Core fold_right(const Matrix& A, Eigen::Index n, Eigen::Index r1) {
    ExtendedTT::Core core(n);
    for (Eigen::Index j = 0; j < n; ++j) core[j] = A.middleCols(j * r1, r1);
    return core;
}

double core_norm(const ExtendedTT::Core& core) {
    double s = 0.0;
    for (const auto& slice : core) s += slice.squaredNorm();
    return std::sqrt(s);
}

/// Right-orthogonalize cores[first+1..end), absorbing factors leftward.
/// Afterwards the tensor norm is the Frobenius norm of cores[first].
void right_orthogonalize(std::vector<ExtendedTT::Core>& cores, int first = 0) {
    for (int i = static_cast<int>(cores.size()) - 1; i > first; --i) {
        Matrix B = right_unfold(cores[i]);
        Eigen::HouseholderQR<Matrix> qr(B.transpose());
        Eigen::Index r = std::min(B.rows(), B.cols());
        Matrix Q = qr.householderQ() * Matrix::Identity(B.cols(), r);
        Matrix L = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
        cores[i] = fold_right(Q.transpose(),
                              static_cast<Eigen::Index>(cores[i].size()),
                              cores[i][0].cols());
        for (auto& slice : cores[i - 1]) slice = slice * L.transpose();
    }
}

Matrix core_matrix(const ExtendedTT::Core& core, const double* coeff) {
    Matrix M = coeff[0] * core[0];
    for (size_t j = 1; j < core.size(); ++j) M.noalias() += coeff[j] * core[j];
    return M;
}

}  // namespace

ExtendedTT::ExtendedTT(std::vector<Core> cores, std::vector<BasisPtr> bases)
    : cores_(std::move(cores)), bases_(std::move(bases)) {
    if (cores_.size() != bases_.size() || cores_.empty())
        throw DimensionMismatch("ExtendedTT: cores/bases size mismatch");
    Eigen::Index prev = 1;
    for (size_t i = 0; i < cores_.size(); ++i) {
        if (cores_[i].empty() ||
            static_cast<int>(cores_[i].size()) != bases_[i]->size)
            throw DimensionMismatch("ExtendedTT: core " + std::to_string(i) +
                                    " slice count != basis size");
        for (const auto& slice : cores_[i])
            if (slice.rows() != prev || slice.cols() != cores_[i][0].cols())
                throw DimensionMismatch("ExtendedTT: inconsistent ranks at core " +
                                        std::to_string(i));
        prev = cores_[i][0].cols();
    }
    if (prev != 1) throw DimensionMismatch("ExtendedTT: last rank must be 1");
}

std::vector<int> ExtendedTT::ranks() const {
    std::vector<int> r;
    for (size_t i = 0; i + 1 < cores_.size(); ++i)
        r.push_back(static_cast<int>(cores_[i][0].cols()));
    return r;
}

std::vector<int> ExtendedTT::basis_sizes() const {
    std::vector<int> n;
    for (const auto& basis : bases_) n.push_back(basis->size);
    return n;
}

double ExtendedTT::evaluate(const Vector& xhat) const {
    if (xhat.size() != dim())
        throw OutOfChart("ExtendedTT::evaluate: dimension mismatch");
    thread_local std::vector<double> coeff;
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Ones(1);
    for (int i = 0; i < dim(); ++i) {
        const auto& basis = *bases_[i];
        double x = xhat[i];
        if (x < basis.a - 1e-9 * (1.0 + std::abs(basis.a)) ||
            x > basis.b + 1e-9 * (1.0 + std::abs(basis.b)))
            throw OutOfChart("ExtendedTT::evaluate: coordinate " +
                             std::to_string(i) + " outside basis interval");
        coeff.resize(basis.size);
        basis.eval_all(x, coeff.data());
        acc = acc * core_matrix(cores_[i], coeff.data());
    }
    return acc(0);
}

double ExtendedTT::contract_rank1(const std::vector<Vector>& vectors) const {
    if (static_cast<int>(vectors.size()) != dim())
        throw DimensionMismatch("contract_rank1: need one vector per dimension");
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Ones(1);
    for (int i = 0; i < dim(); ++i) {
        if (vectors[i].size() != bases_[i]->size)
            throw DimensionMismatch("contract_rank1: vector " +
                                    std::to_string(i) + " has wrong length");
        acc = acc * core_matrix(cores_[i], vectors[i].data());
    }
    return acc(0);
}

double ExtendedTT::norm() const {
    auto cores = cores_;
    right_orthogonalize(cores);
    return core_norm(cores[0]);
}

ExtendedTT ExtendedTT::rounded(double eps, double* bound,
                               const std::vector<int>* target_ranks) const {
    auto cores = cores_;
    right_orthogonalize(cores);
    const double total_norm = core_norm(cores[0]);
    const int d = dim();
    // per-bond budget so that the accumulated error stays below eps * ||g||
    const double delta =
        d > 1 ? eps * total_norm / std::sqrt(static_cast<double>(d - 1)) : 0.0;
    double discarded = 0.0;
    for (int i = 0; i + 1 < d; ++i) {
        Matrix A = left_unfold(cores[i]);
        Eigen::BDCSVD<Matrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const auto& sigma = svd.singularValues();
        Eigen::Index full = sigma.size();
        Eigen::Index keep = full;
        if (target_ranks) {
            keep = std::min<Eigen::Index>(full, (*target_ranks)[i]);
        } else {
            double tail = 0.0;
            while (keep > 1) {
                double candidate = tail + sigma[keep - 1] * sigma[keep - 1];
                if (std::sqrt(candidate) > delta) break;
                tail = candidate;
                --keep;
            }
        }
        for (Eigen::Index k = keep; k < full; ++k)
            discarded += sigma[k] * sigma[k];
        Matrix U = svd.matrixU().leftCols(keep);
        Matrix carry = sigma.head(keep).asDiagonal() *
                       svd.matrixV().leftCols(keep).transpose();
        cores[i] = fold_left(U, cores[i][0].rows(),
                             static_cast<Eigen::Index>(cores[i].size()));
        for (auto& slice : cores[i + 1]) slice = carry * slice;
    }
    if (bound) *bound = std::sqrt(discarded);
    return ExtendedTT(std::move(cores), bases_);
}

nlohmann::json ExtendedTT::to_json() const {
    nlohmann::json j;
    j["format"] = "extended-tt";
    j["version"] = 1;
    j["dim"] = dim();
    j["ranks"] = ranks();
    j["basis_sizes"] = basis_sizes();
    nlohmann::json bases = nlohmann::json::array();
    for (const auto& basis : bases_) bases.push_back(basis_to_json(*basis));
    j["bases"] = std::move(bases);
    nlohmann::json cores = nlohmann::json::array();
    for (const auto& core : cores_) {
        const auto r0 = core[0].rows(), r1 = core[0].cols();
        const auto n = static_cast<Eigen::Index>(core.size());
        // row-major flattening of the (r0, n, r1) array
        std::vector<double> flat;
        flat.reserve(r0 * n * r1);
        for (Eigen::Index k0 = 0; k0 < r0; ++k0)
            for (Eigen::Index jj = 0; jj < n; ++jj)
                for (Eigen::Index k1 = 0; k1 < r1; ++k1)
                    flat.push_back(core[jj](k0, k1));
        cores.push_back({{"r0", r0}, {"n", n}, {"r1", r1}, {"data", flat}});
    }
    j["cores"] = std::move(cores);
    return j;
}

ExtendedTT ExtendedTT::from_json(const nlohmann::json& j) {
    if (j.at("format").get<std::string>() != "extended-tt")
        throw ConfigError("ExtendedTT::from_json: unexpected format tag");
    std::vector<BasisPtr> bases;
    for (const auto& bj : j.at("bases"))
        bases.push_back(std::make_shared<OrthonormalBasis1D>(basis_from_json(bj)));
    std::vector<Core> cores;
    for (const auto& cj : j.at("cores")) {
        Eigen::Index r0 = cj.at("r0").get<Eigen::Index>();
        Eigen::Index n = cj.at("n").get<Eigen::Index>();
        Eigen::Index r1 = cj.at("r1").get<Eigen::Index>();
        auto flat = cj.at("data").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(flat.size()) != r0 * n * r1)
            throw ConfigError("ExtendedTT::from_json: bad core payload");
        Core core(n, Matrix::Zero(r0, r1));
        size_t idx = 0;
        for (Eigen::Index k0 = 0; k0 < r0; ++k0)
            for (Eigen::Index jj = 0; jj < n; ++jj)
                for (Eigen::Index k1 = 0; k1 < r1; ++k1)
                    core[jj](k0, k1) = flat[idx++];
        cores.push_back(std::move(core));
    }
    return ExtendedTT(std::move(cores), std::move(bases));
}

// ---------------------------------------------------------------------------
// rank-adaptive alternating least squares
// ---------------------------------------------------------------------------

namespace {

struct AlsWorkspace {
    std::vector<Matrix> B;         // per-dimension basis evaluations, N x n_i
    std::vector<Matrix> left_if;   // left_if[i]: N x rr[i]
    std::vector<Matrix> right_if;  // right_if[i]: N x rr[i+1]
    Vector values;
    int n_train = 0;
};

Matrix interface_step_left(const Matrix& prev, const ExtendedTT::Core& core,
                           const Matrix& B) {
    const Eigen::Index N = prev.rows(), r1 = core[0].cols();
    Matrix out = Matrix::Zero(N, r1);
    for (size_t j = 0; j < core.size(); ++j)
        out.noalias() += (prev.array().colwise() * B.col(j).array()).matrix() *
                         core[j];
    return out;
}

Matrix interface_step_right(const Matrix& next, const ExtendedTT::Core& core,
                            const Matrix& B) {
    const Eigen::Index N = next.rows(), r0 = core[0].rows();
    Matrix out = Matrix::Zero(N, r0);
    for (size_t j = 0; j < core.size(); ++j)
        out.noalias() +=
            (next.array().colwise() * B.col(j).array()).matrix() *
            core[j].transpose();
    return out;
}

int structural_rank_bound(const std::vector<int>& n, int bond) {
    long left = 1, right = 1;
    for (int i = 0; i <= bond; ++i) left = std::min<long>(left * n[i], 1 << 20);
    for (size_t i = bond + 1; i < n.size(); ++i)
        right = std::min<long>(right * n[i], 1 << 20);
    return static_cast<int>(std::min(left, right));
}

double relative_rms(const Vector& pred, const Vector& truth) {
    double num = (pred - truth).squaredNorm();
    double den = truth.squaredNorm();
    return den > 0.0 ? std::sqrt(num / den)
                     : std::sqrt(num / std::max<double>(pred.size(), 1));
}

}  // namespace

std::pair<ExtendedTT, FitDiagnostics> fit_als(const LayerSampleSet& samples,
                                              std::vector<BasisPtr> bases,
                                              const FitOptions& opts) {
    const int d = static_cast<int>(bases.size());
    const int N_total = static_cast<int>(samples.points.rows());
    if (samples.points.cols() != d)
        throw DimensionMismatch("fit_als: sample dimension != basis count");
    if (opts.max_rank < opts.initial_rank || opts.initial_rank < 1)
        throw ConfigError("fit_als: invalid rank bounds");

    FitDiagnostics diag;
    AlsWorkspace ws;
    const int n_val =
        std::min(N_total - 1,
                 static_cast<int>(std::floor(N_total * opts.validation_fraction)));
    ws.n_train = N_total - n_val;
    const int N = ws.n_train;

    std::vector<int> sizes;
    for (const auto& basis : bases) sizes.push_back(basis->size);

    ws.B.resize(d);
    for (int i = 0; i < d; ++i) {
        ws.B[i].resize(N_total, sizes[i]);
        std::vector<double> row(sizes[i]);
        for (int s = 0; s < N_total; ++s) {
            bases[i]->eval_all(samples.points(s, i), row.data());
            for (int j = 0; j < sizes[i]; ++j) ws.B[i](s, j) = row[j];
        }
    }
    ws.values = samples.values;

    // ranks rr[0..d], bond i+1 sits between cores i and i+1
    std::vector<Eigen::Index> rr(d + 1, 1);
    for (int i = 1; i < d; ++i)
        rr[i] = std::min({opts.initial_rank, opts.max_rank,
                          structural_rank_bound(sizes, i - 1)});

    SeededRng rng(opts.seed, 0x7a5u);
    // constant-dominant start: the first basis function carries the weight
    // mass, so this seeds ALS near the mean-field solution; the random part
    // breaks symmetry for targets orthogonal to constants
    auto initial_core = [&](Eigen::Index r0, int n, Eigen::Index r1) {
        ExtendedTT::Core core(n);
        double scale = 0.05 / std::sqrt(static_cast<double>(n) * r0 * r1);
        for (int j = 0; j < n; ++j) {
            core[j].resize(r0, r1);
            for (Eigen::Index p = 0; p < r0; ++p)
                for (Eigen::Index q = 0; q < r1; ++q)
                    core[j](p, q) = scale * rng.normal() +
                                    ((j == 0 && p == q) ? 1.0 : 0.0);
        }
        return core;
    };
    std::vector<ExtendedTT::Core> cores(d);
    for (int i = 0; i < d; ++i)
        cores[i] = initial_core(rr[i], sizes[i], rr[i + 1]);
    right_orthogonalize(cores);

    int max_params = 0;
    for (int i = 0; i < d; ++i)
        max_params = std::max<int>(max_params,
                                   static_cast<int>(rr[i] * sizes[i] * rr[i + 1]));
    if (N < 3 * max_params) {
        std::ostringstream oss;
        oss << "fit_als: " << N << " training samples for up to " << max_params
            << " core parameters (recommended >= " << 3 * max_params << ")";
        diag.warnings.push_back(oss.str());
    }

    auto rebuild_right = [&]() {
        ws.right_if.assign(d, Matrix());
        ws.right_if[d - 1] = Matrix::Ones(N_total, 1);
        for (int i = d - 2; i >= 0; --i)
            ws.right_if[i] =
                interface_step_right(ws.right_if[i + 1], cores[i + 1], ws.B[i + 1]);
    };
    auto rebuild_left = [&]() {
        ws.left_if.assign(d, Matrix());
        ws.left_if[0] = Matrix::Ones(N_total, 1);
        for (int i = 1; i < d; ++i)
            ws.left_if[i] =
                interface_step_left(ws.left_if[i - 1], cores[i - 1], ws.B[i - 1]);
    };
    rebuild_right();
    rebuild_left();

    auto predictions = [&]() {
        // consistent interfaces assumed: pred = left_if[d-1] * G^{d-1}
        Vector pred(N_total);
        Matrix last = interface_step_left(ws.left_if[d - 1], cores[d - 1],
                                          ws.B[d - 1]);
        for (int s = 0; s < N_total; ++s) pred[s] = last(s, 0);
        return pred;
    };

    auto solve_core = [&](int i, int sweep) {
        const Eigen::Index r0 = rr[i], r1 = rr[i + 1];
        const int n = sizes[i];
        const Eigen::Index u = r0 * n * r1;
        Matrix AtA = Matrix::Zero(u, u);
        Vector Atb = Vector::Zero(u);
        Vector phi(u);
        for (int s = 0; s < N; ++s) {
            // phi packed in (j, k0, k1) order; the unpack below must match
            Eigen::Index idx = 0;
            for (int j = 0; j < n; ++j) {
                const double bj = ws.B[i](s, j);
                for (Eigen::Index k0 = 0; k0 < r0; ++k0) {
                    const double lb = ws.left_if[i](s, k0) * bj;
                    for (Eigen::Index k1 = 0; k1 < r1; ++k1)
                        phi[idx++] = lb * ws.right_if[i](s, k1);
                }
            }
            AtA.selfadjointView<Eigen::Lower>().rankUpdate(phi, 1.0);
            Atb.noalias() += ws.values[s] * phi;
        }
        AtA = AtA.selfadjointView<Eigen::Lower>();
        const double lambda =
            opts.ridge * AtA.trace() / static_cast<double>(u);
        AtA.diagonal().array() += std::max(lambda, 1e-300);
        Eigen::LDLT<Matrix> ldlt(AtA);
        if (ldlt.info() != Eigen::Success)
            throw IllConditionedSolve("fit_als: normal-equation solve failed",
                                      sweep);
        Vector g = ldlt.solve(Atb);
        if (!g.allFinite())
            throw IllConditionedSolve("fit_als: non-finite core update", sweep);
        Eigen::Index idx = 0;
        for (int j = 0; j < n; ++j)
            for (Eigen::Index k0 = 0; k0 < r0; ++k0)
                for (Eigen::Index k1 = 0; k1 < r1; ++k1)
                    cores[i][j](k0, k1) = g[idx++];
    };

    // a bond may only grow while it stays non-redundant next to its
    // neighbors, otherwise the following orthogonalization deflates it again
    auto local_rank_bound = [&](int b) {
        return std::min<Eigen::Index>(rr[b] * sizes[b],
                                      sizes[b + 1] * rr[b + 2]);
    };
    // growth must keep every touched core solve inside the sample budget
    // (N >= 3 x parameters); past that the solves overfit badly
    auto growth_affordable = [&](int b) {
        Eigen::Index left = rr[b] * sizes[b] * (rr[b + 1] + 1);
        Eigen::Index right = (rr[b + 1] + 1) * sizes[b + 1] * rr[b + 2];
        return 3 * std::max(left, right) <= N;
    };

    auto grow_rank = [&]() -> bool {
        // residual-gradient proxy per bond, largest wins
        rebuild_left();
        rebuild_right();
        Vector resid = predictions() - ws.values;
        int best_bond = -1;
        double best_score = -1.0;
        for (int b = 0; b + 1 < d; ++b) {
            if (rr[b + 1] >= opts.max_rank ||
                rr[b + 1] >= structural_rank_bound(sizes, b) ||
                rr[b + 1] >= local_rank_bound(b) || !growth_affordable(b))
                continue;
            Matrix left_at_bond =
                interface_step_left(ws.left_if[b], cores[b], ws.B[b]);
            Matrix proj = Matrix::Zero(rr[b + 1], rr[b + 1]);
            for (int s = 0; s < N; ++s)
                proj.noalias() += resid[s] * left_at_bond.row(s).transpose() *
                                  ws.right_if[b].row(s);
            double score = proj.norm() / N;
            if (score > best_score) {
                best_score = score;
                best_bond = b;
            }
        }
        if (best_bond < 0) return false;
        const int b = best_bond;
        // new column on the left core, orthogonal against its unfolding
        Matrix A = left_unfold(cores[b]);
        Vector col(A.rows());
        for (Eigen::Index p = 0; p < col.size(); ++p) col[p] = rng.normal();
        Eigen::HouseholderQR<Matrix> qr(A);
        Matrix Q = qr.householderQ() * Matrix::Identity(A.rows(),
                                                        std::min(A.rows(), A.cols()));
        col -= Q * (Q.transpose() * col);
        double cn = col.norm();
        if (cn > 0) col *= (1e-3 * std::max(core_norm(cores[b]), 1e-30)) / cn;
        for (int j = 0; j < sizes[b]; ++j) {
            cores[b][j].conservativeResize(rr[b], rr[b + 1] + 1);
            cores[b][j].col(rr[b + 1]) = col.segment(j * rr[b], rr[b]);
        }
        // matching random row on the right core
        double row_scale = 1e-3 * std::max(core_norm(cores[b + 1]), 1e-30) /
                           std::sqrt(static_cast<double>(sizes[b + 1] * rr[b + 2]));
        for (int j = 0; j < sizes[b + 1]; ++j) {
            cores[b + 1][j].conservativeResize(rr[b + 1] + 1, rr[b + 2]);
            for (Eigen::Index q = 0; q < rr[b + 2]; ++q)
                cores[b + 1][j](rr[b + 1], q) = row_scale * rng.normal();
        }
        rr[b + 1] += 1;
        ++diag.rank_increases;
        rebuild_left();
        rebuild_right();
        return true;
    };

    double prev_res = std::numeric_limits<double>::infinity();
    double best_res = std::numeric_limits<double>::infinity();
    std::vector<ExtendedTT::Core> best_cores = cores;

    for (int sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
        diag.sweeps = sweep;
        // left-to-right half sweep
        for (int i = 0; i < d; ++i) {
            solve_core(i, sweep);
            if (i + 1 < d) {
                Matrix A = left_unfold(cores[i]);
                Eigen::HouseholderQR<Matrix> qr(A);
                Eigen::Index r = std::min(A.rows(), A.cols());
                Matrix Q = qr.householderQ() * Matrix::Identity(A.rows(), r);
                Matrix R = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
                cores[i] = fold_left(Q, rr[i], sizes[i]);
                for (auto& slice : cores[i + 1]) slice = R * slice;
                rr[i + 1] = r;  // QR may deflate a redundant bond
                ws.left_if[i + 1] =
                    interface_step_left(ws.left_if[i], cores[i], ws.B[i]);
            }
        }
        // right-to-left half sweep; right_if[i] was refreshed by the
        // previous iteration's orthogonalization step
        for (int i = d - 1; i >= 0; --i) {
            solve_core(i, sweep);
            if (i > 0) {
                Matrix Bm = right_unfold(cores[i]);
                Eigen::HouseholderQR<Matrix> qr(Bm.transpose());
                Eigen::Index r = std::min(Bm.rows(), Bm.cols());
                Matrix Q = qr.householderQ() * Matrix::Identity(Bm.cols(), r);
                Matrix L = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
                cores[i] = fold_right(Q.transpose(), sizes[i], rr[i + 1]);
                for (auto& slice : cores[i - 1]) slice = slice * L.transpose();
                rr[i] = r;
                ws.right_if[i - 1] =
                    interface_step_right(ws.right_if[i], cores[i], ws.B[i]);
            }
        }
        rebuild_left();
        Vector pred = predictions();
        double res = relative_rms(pred.head(N), ws.values.head(N));
        diag.sweep_residuals.push_back(res);
        if (res < best_res) {
            best_res = res;
            best_cores = cores;
        }
        if (res <= opts.target_residual) {
            diag.converged = true;
            break;
        }
        const double improvement = (prev_res - res) / std::max(prev_res, 1e-300);
        if (sweep > 1 && improvement < opts.stagnation_factor) {
            if (!grow_rank()) break;  // stagnated at rank ceiling
            prev_res = std::numeric_limits<double>::infinity();
        } else {
            prev_res = res;
        }
    }

    cores = std::move(best_cores);
    diag.train_residual = best_res;
    ExtendedTT result(std::move(cores), std::move(bases));
    diag.ranks = result.ranks();
    if (n_val > 0) {
        Vector pred_val(n_val), truth_val(n_val);
        for (int s = 0; s < n_val; ++s) {
            pred_val[s] = result.evaluate(samples.points.row(N + s));
            truth_val[s] = samples.values[N + s];
        }
        diag.validation_residual = relative_rms(pred_val, truth_val);
    } else {
        diag.validation_residual = diag.train_residual;
    }
    return {std::move(result), std::move(diag)};
}

double empirical_l2(const Vector& predicted, const Vector& actual) {
    if (predicted.size() != actual.size())
        throw DimensionMismatch("empirical_l2: size mismatch");
    if (predicted.size() == 0) return 0.0;
    return std::sqrt((predicted - actual).squaredNorm() / predicted.size());
}

double empirical_l2(const ExtendedTT& tt, const LayerSampleSet& samples) {
    Vector pred(samples.points.rows());
    for (Eigen::Index s = 0; s < samples.points.rows(); ++s)
        pred[s] = tt.evaluate(samples.points.row(s));
    return empirical_l2(pred, samples.values);
}

double empirical_kl(const Vector& log_f, const Vector& f_h) {
    if (log_f.size() != f_h.size())
        throw DimensionMismatch("empirical_kl: size mismatch");
    double acc = 0.0;
    std::vector<Eigen::Index> bad;
    for (Eigen::Index s = 0; s < f_h.size(); ++s) {
        if (!(f_h[s] > 0.0)) {
            bad.push_back(s);
            continue;
        }
        acc += log_f[s] - std::log(f_h[s]);
    }
    if (!bad.empty()) {
        std::ostringstream oss;
        oss << "empirical_kl: surrogate non-positive at " << bad.size()
            << " of " << f_h.size() << " points (first index " << bad.front()
            << ")";
        throw NonPositiveSurrogate(oss.str());
    }
    return acc / static_cast<double>(log_f.size());
}

}  // namespace ttdensity
