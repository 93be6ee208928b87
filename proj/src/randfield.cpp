#include "tolopt/randfield.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "tolopt/error.hpp"

namespace tolopt {

void CorrelationSpec::validate() const
{
  if (!(L_LE > 0.0 && L_LE < L0))
    throw config_error("correlation lengths must satisfy 0 < L_LE < L0");
  if (!(w > 0.0))
    throw config_error("correlation width w must be positive");
}

double correlation_length(const CorrelationSpec& spec, double s)
{
  return spec.L0 + (spec.L_LE - spec.L0) * std::exp(-s * s / (spec.w * spec.w));
}

double correlation(const CorrelationSpec& spec, double s, double s2)
{
  const double l1 = correlation_length(spec, s);
  const double l2 = correlation_length(spec, s2);
  const double d2 = (s - s2) * (s - s2);
  if (spec.form == CorrelationForm::geometric_mean)
    return std::exp(-d2 / (2.0 * l1 * l2));
  const double sum = l1 * l1 + l2 * l2;
  return std::sqrt(2.0 * l1 * l2 / sum) * std::exp(-d2 / sum);
}

Eigen::MatrixXd correlation_matrix(const BladeSurface& surface, const CorrelationSpec& spec)
{
  const Eigen::Index m = surface.s.size();
  Eigen::MatrixXd rho(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    rho(i, i) = 1.0;
    for (Eigen::Index j = 0; j < i; ++j)
      rho(i, j) = rho(j, i) = correlation(spec, surface.s[i], surface.s[j]);
  }
  if (!rho.allFinite())
    throw numerical_error("correlation matrix has non-finite entries");
  return rho;
}

KLBasis kl_decompose(const BladeSurface& surface, const CorrelationSpec& spec, double energy_fraction)
{
  if (surface.size() < 2)
    throw std::invalid_argument("K-L decomposition needs at least two grid points");
  if (!(energy_fraction > 0.0 && energy_fraction <= 1.0))
    throw std::invalid_argument("energy_fraction must lie in (0, 1]");
  spec.validate();

  const Eigen::VectorXd sqrt_w = surface.quad_weights.cwiseSqrt();
  const Eigen::MatrixXd op = sqrt_w.asDiagonal() * correlation_matrix(surface, spec) * sqrt_w.asDiagonal();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(op);
  if (solver.info() != Eigen::Success)
    throw numerical_error("eigensolver failed on the correlation operator");

  // Eigen returns ascending order
  const Eigen::Index m = op.rows();
  KLBasis kl;
  kl.spectrum = solver.eigenvalues().reverse();
  kl.quad_weights = surface.quad_weights;
  kl.energy_fraction = energy_fraction;

  // negative eigenvalues never enter the retained set; those below -1e-10 lambda_1 are counted
  // since they mean the kernel itself is indefinite rather than rounding noise
  const double noise = -1e-10 * kl.spectrum[0];
  kl.n_significant_negative = (kl.spectrum.array() < noise).count();
  Eigen::Index n_pos = 0;
  while (n_pos < m && kl.spectrum[n_pos] > 0.0)
    ++n_pos;
  kl.n_positive = n_pos;

  const double positive_total = kl.spectrum.head(n_pos).sum();
  Eigen::Index keep = n_pos;
  if (energy_fraction < 1.0) {
    double cum = 0.0;
    for (Eigen::Index i = 0; i < n_pos; ++i) {
      cum += kl.spectrum[i];
      if (cum >= energy_fraction * positive_total) {
        keep = i + 1;
        break;
      }
    }
  }

  kl.eigenvalues = kl.spectrum.head(keep);
  const Eigen::MatrixXd vecs = solver.eigenvectors().rowwise().reverse();
  kl.eigenfunctions = sqrt_w.cwiseInverse().asDiagonal() * vecs.leftCols(keep);
  kl.scaled_modes = kl.eigenfunctions * kl.eigenvalues.cwiseSqrt().asDiagonal();
  return kl;
}

SampleSet make_samples(std::uint64_t seed, Eigen::Index n_samples, Eigen::Index n_modes)
{
  if (n_samples < 1 || n_modes < 0)
    throw std::invalid_argument("sample set needs N >= 1");
  SampleSet out;
  out.seed = seed;
  out.xi.resize(n_samples, n_modes);
  std::mt19937_64 engine(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index n = 0; n < n_samples; ++n)
    for (Eigen::Index i = 0; i < n_modes; ++i)
      out.xi(n, i) = normal(engine);
  return out;
}

namespace {
constexpr char kMagic[8] = {'T', 'O', 'L', 'S', 'M', 'P', '1', '\0'};
}

void save_samples(const SampleSet& samples, const std::string& path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw config_error("cannot write sample cache: " + path);
  const std::uint64_t header[3] = {samples.seed, static_cast<std::uint64_t>(samples.size()),
                                   static_cast<std::uint64_t>(samples.n_modes())};
  out.write(kMagic, sizeof kMagic);
  out.write(reinterpret_cast<const char*>(header), sizeof header);
  // row-major payload
  for (Eigen::Index n = 0; n < samples.size(); ++n)
    for (Eigen::Index i = 0; i < samples.n_modes(); ++i) {
      const double v = samples.xi(n, i);
      out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
}

SampleSet load_samples(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw config_error("cannot open sample cache: " + path);
  char magic[8];
  std::uint64_t header[3];
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(header), sizeof header);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw config_error("not a sample cache file: " + path);
  SampleSet out;
  out.seed = header[0];
  out.xi.resize(static_cast<Eigen::Index>(header[1]), static_cast<Eigen::Index>(header[2]));
  for (Eigen::Index n = 0; n < out.xi.rows(); ++n)
    for (Eigen::Index i = 0; i < out.xi.cols(); ++i)
      in.read(reinterpret_cast<char*>(&out.xi(n, i)), sizeof(double));
  if (!in)
    throw config_error("truncated sample cache: " + path);
  return out;
}

std::string sample_cache_name(std::uint64_t seed, Eigen::Index n_samples, Eigen::Index n_modes)
{
  return "samples_s" + std::to_string(seed) + "_n" + std::to_string(n_samples) + "_m" + std::to_string(n_modes) +
         ".bin";
}

SampleSet cached_samples(const std::string& dir, std::uint64_t seed, Eigen::Index n_samples, Eigen::Index n_modes)
{
  const auto path = std::filesystem::path(dir) / sample_cache_name(seed, n_samples, n_modes);
  if (std::filesystem::exists(path)) {
    SampleSet cached = load_samples(path.string());
    if (cached.seed == seed && cached.size() == n_samples && cached.n_modes() == n_modes)
      return cached;
  }
  SampleSet fresh = make_samples(seed, n_samples, n_modes);
  std::filesystem::create_directories(dir);
  save_samples(fresh, path.string());
  return fresh;
}

Eigen::VectorXd sample_unit_field(const KLBasis& kl, const Eigen::VectorXd& xi_row)
{
  if (xi_row.size() != kl.n_modes())
    throw std::invalid_argument("xi length does not match the retained mode count");
  return kl.scaled_modes * xi_row;
}

Eigen::VectorXd scale_field(const Eigen::VectorXd& e_tilde, const Eigen::VectorXd& sigma_on_grid)
{
  if (e_tilde.size() != sigma_on_grid.size())
    throw std::invalid_argument("sigma and field lengths differ");
  if ((sigma_on_grid.array() < 0.0).any())
    throw std::invalid_argument("negative standard deviation on the grid");
  return sigma_on_grid.cwiseProduct(e_tilde);
}

Eigen::VectorXd pathwise_sigma_sensitivity(const Eigen::VectorXd& e_tilde, const KnotVector& kv, std::size_t i,
                                           const Eigen::VectorXd& s)
{
  if (e_tilde.size() != s.size())
    throw std::invalid_argument("field and grid lengths differ");
  Eigen::VectorXd out(s.size());
  for (Eigen::Index j = 0; j < s.size(); ++j)
    out[j] = e_tilde[j] * basis_value(kv, i, s[j]);
  return out;
}

} // namespace tolopt
