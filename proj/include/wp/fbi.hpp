#pragma once

#include <memory>
#include <vector>

#include "wp/dyadic.hpp"
#include "wp/field.hpp"
#include "wp/parallel.hpp"
#include "wp/window.hpp"

namespace wp {

// Phase-space quadrature grid for one band. x-nodes are uniform over the
// period; xi-nodes are uniform midpoints over +-[xi_lo, xi_hi] where the
// cover contains {lambda/8 < |xi| < 2 lambda} and additionally reaches
// lambda/4 - sqrt(lambda) so the transform of band-limited data is fully
// sampled. Spacings: h_x <= 2 pi/(8 lambda), h_xi = sqrt(lambda)/8.
struct PhaseGrid {
    int k = 0;
    double lambda = 0.0;
    double length = kTwoPi;
    int nx = 0;
    double hx = 0.0;
    double hxi = 0.0;
    std::vector<double> xi;  // ascending, both signs

    PhaseGrid(const SpatialGrid& grid, int band, double spacing_factor = 8.0,
              double x_factor = 8.0);

    double weight() const { return hx * hxi; }
    double x(int i) const { return i * hx; }
    int nxi() const { return static_cast<int>(xi.size()); }
    std::ptrdiff_t nodes() const { return static_cast<std::ptrdiff_t>(nx) * nxi(); }

    /// max |m(eta)-1| of the discrete frame multiplier over grid
    /// frequencies in [eta_lo, eta_hi] (both signs).
    double multiplier_defect(const Window& w, double eta_lo, double eta_hi) const;
};

/// F(x_i, xi_j) on a phase grid, row-major (i * nxi + j).
struct PhaseSpaceField {
    std::shared_ptr<const PhaseGrid> grid;
    std::vector<cplx> v;

    double l2_norm() const;
    PhaseSpaceField& operator*=(cplx c);
};

// Precomputed per-(window, phase grid, spatial grid) transform tables:
// window values on the node/mode lattice and roots of unity for the
// x-phases. All transforms run through these; serial variants are the
// reference implementations for the parallel kernels.
class FbiTables {
  public:
    FbiTables(const Window& w, std::shared_ptr<const PhaseGrid> pg, const SpatialGrid& grid);

    const PhaseGrid& pgrid() const { return *pg_; }
    std::shared_ptr<const PhaseGrid> pgrid_ptr() const { return pg_; }
    const SpatialGrid& sgrid() const { return grid_; }
    const Window& window() const { return w_; }

    /// T_lambda f sampled on the phase grid (no band check).
    PhaseSpaceField forward(const SampledField& f) const;
    PhaseSpaceField forward_serial(const SampledField& f) const;

    /// sum_{ij} weight * C(i,j) * (w_d)_lambda(y; x_i, xi_j) assembled in
    /// frequency space; d = 0,1,2 picks the ghat derivative order.
    SampledField scatter(const std::vector<cplx>& c, int deriv_order = 0) const;
    SampledField scatter_serial(const std::vector<cplx>& c, int deriv_order = 0) const;

    /// Scatter with per-node weights w(i, j) computed on the fly.
    template <class WeightFn>
    SampledField scatter_weighted(WeightFn&& wfn, int deriv_order) const;

    /// T_lambda f at an arbitrary phase-space point.
    cplx eval_offgrid(const SampledField& f, double x, double xi) const;

    /// Exact frame multiplier m(eta) for in-order FFT index m.
    const std::vector<double>& frame_multiplier() const { return mult_; }

  private:
    template <bool kParallel>
    PhaseSpaceField forward_impl(const SampledField& f) const;
    template <bool kParallel, class WeightFn>
    SampledField scatter_impl(WeightFn&& wfn, int deriv_order) const;

    Window w_;
    std::shared_ptr<const PhaseGrid> pg_;
    SpatialGrid grid_;
    double qnorm_ = 0.0;  // lambda^{-1/4}
    int mspan_ = 0;       // modes per node window
    std::vector<int> mlo_;                // first signed mode per xi node
    std::vector<double> wtab_[3];         // window values [j*mspan + (m-mlo_j)]
    std::vector<cplx> unit_;              // e^{+2 pi i t/nx}, t = 0..nx-1
    std::vector<double> mult_;
};

template <bool kParallel, class WeightFn>
SampledField FbiTables::scatter_impl(WeightFn&& wfn, int deriv_order) const {
    if (deriv_order < 0 || deriv_order > 2) throw std::invalid_argument("scatter window order must be 0..2");
    const PhaseGrid& p = *pg_;
    const int nxi = p.nxi();
    const int nx = p.nx;
    const int n = grid_.n;
    const double wq = p.weight() * qnorm_;
    const std::vector<double>& wt_all = wtab_[deriv_order];

    const int nchunks = 64;
    ChunkedAccumulator acc(static_cast<std::size_t>(n), nchunks);
    const int per = (nx + nchunks - 1) / nchunks;
    auto chunk = [&](std::ptrdiff_t ci) {
        auto& buf = acc.buffer(static_cast<int>(ci));
        const int ilo = static_cast<int>(ci) * per;
        const int ihi = std::min(nx, ilo + per);
        for (int i = ilo; i < ihi; ++i) {
            for (int j = 0; j < nxi; ++j) {
                const cplx cij = wfn(i, j);
                if (cij == cplx(0.0, 0.0)) continue;
                const int mlo = mlo_[static_cast<std::size_t>(j)];
                const double* wt = wt_all.data() + static_cast<std::size_t>(j) * mspan_;
                long long idx = (static_cast<long long>(mlo) * i) % nx;
                if (idx < 0) idx += nx;
                const cplx cw = cij * wq;
                for (int t = 0; t < mspan_; ++t) {
                    const double wv = wt[t];
                    if (wv != 0.0) {
                        const int m = mlo + t;
                        const int fi = m >= 0 ? m : m + n;
                        buf[static_cast<std::size_t>(fi)] +=
                            cw * wv * std::conj(unit_[static_cast<std::size_t>(idx)]);
                    }
                    idx += i;
                    if (idx >= nx) idx -= nx;
                }
            }
        }
    };
    if constexpr (kParallel)
        parallel_for(nchunks, chunk);
    else
        serial_for(nchunks, chunk);
    return SampledField::from_spectrum(grid_, acc.reduce());
}

template <class WeightFn>
SampledField FbiTables::scatter_weighted(WeightFn&& wfn, int deriv_order) const {
    return scatter_impl<true>(std::forward<WeightFn>(wfn), deriv_order);
}

/// g_lambda(y; x, xi) periodized over the torus of circumference `length`,
/// evaluated by its finite Fourier series.
cplx packet_eval(const Window& w, double lambda, double x, double xi, double y,
                 double length = kTwoPi);

/// T_lambda f on a fresh default phase grid; checks that f is band-limited
/// to lambda/4 < |xi| < lambda when enforce_band is set.
PhaseSpaceField fbi_forward(const Window& w, std::shared_ptr<const PhaseGrid> pg,
                            const SampledField& f, bool enforce_band = true);

/// Adjoint transform T_lambda^* F.
SampledField fbi_adjoint(const Window& w, const PhaseSpaceField& f, const SpatialGrid& grid);

cplx fbi_eval_offgrid(const Window& w, const SampledField& f, double lambda, double x, double xi);

/// Correction packet (P_y + L_{x,xi}) g_lambda(.; x, xi) for one node.
struct CorrectionPacket {
    SampledField field;                 // values over the spatial grid
    std::vector<cplx> window_hat;       // rescaled spectrum ghat_{x,xi}(zeta_i)
    std::vector<double> window_zeta;    // zeta values of window_hat (|zeta| <= ~2)
    double d_xi_p = 0.0, d_x_p = 0.0;   // symbol gradient at the node
};

CorrectionPacket correction_packet(const Window& w, const BandOperatorSet& ops, int sign,
                                   double x, double xi);

/// Same construction applied twice: (P_y + L_{x,xi})^2 g_lambda.
CorrectionPacket correction_packet_second(const Window& w, const BandOperatorSet& ops, int sign,
                                          double x, double xi);

}  // namespace wp
