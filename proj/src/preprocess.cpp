#include "vqr/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <tuple>

#include "vqr/error.hpp"

namespace vqr {

namespace {

// Median of a non-empty set; even sizes average the two central values.
double median_of(std::vector<double> v) {
  const auto n = v.size();
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (n % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(v.begin(), mid);
  return (lower + upper) / 2.0;
}

Timestamp floor_minute(Timestamp t) noexcept {
  Timestamp q = t / 60;
  if (t % 60 != 0 && t < 0) --q;
  return q * 60;
}

}  // namespace

bool is_calm(const ComfortAssessment& a) {
  const auto range = legal_range(a.scale);
  if (a.score < range.lo || a.score > range.hi) {
    throw DomainError("is_calm: score " + std::to_string(a.score) + " outside the legal range of " +
                      std::string(to_string(a.scale)));
  }
  switch (a.scale) {
    case ComfortScale::CAPD: return a.score < 9;
    case ComfortScale::ComfortB: return a.score >= 11 && a.score <= 17;
    case ComfortScale::FLACC:
    case ComfortScale::RFLACC:
    case ComfortScale::VNS: return a.score <= 3;
    case ComfortScale::RASS: return a.score <= 1;
  }
  return false;
}

double normalize_bt(double value_celsius, TempSite site) noexcept {
  return site == TempSite::Axillary ? value_celsius + 0.5 : value_celsius;
}

bool in_medication_window(Timestamp t, std::span<const MedicationInterval> meds) noexcept {
  return std::any_of(meds.begin(), meds.end(),
                     [t](const MedicationInterval& m) { return m.start <= t && t <= m.end; });
}

MinuteMedianSeries minute_medians(std::span<const VitalSample> hr_samples) {
  MinuteMedianSeries out;
  std::vector<double> group;
  std::size_t i = 0;
  while (i < hr_samples.size()) {
    const Timestamp minute = floor_minute(hr_samples[i].timestamp);
    group.clear();
    while (i < hr_samples.size() && floor_minute(hr_samples[i].timestamp) == minute) {
      group.push_back(hr_samples[i].value);
      ++i;
    }
    out.push_back({minute, median_of(group)});
  }
  return out;
}

std::vector<RawPair> pair_hr_bt(const MinuteMedianSeries& minutes, std::span<const BtEvent> bt_events) {
  std::vector<RawPair> pairs;
  std::vector<double> window;
  for (const auto& ev : bt_events) {
    const Timestamp lo = ev.timestamp - kPairingHalfWindowSeconds;
    const Timestamp hi = ev.timestamp + kPairingHalfWindowSeconds;
    auto it = std::lower_bound(minutes.begin(), minutes.end(), lo,
                               [](const MinuteMedian& m, Timestamp t) { return m.minute_start < t; });
    window.clear();
    for (; it != minutes.end() && it->minute_start <= hi; ++it) window.push_back(it->median_hr);
    if (window.empty()) continue;
    pairs.push_back({ev.timestamp, ev.bt_celsius, median_of(window)});
  }
  return pairs;
}

MovementGateResult gate_movement(std::span<const RawPair> pairs,
                                 std::span<const ComfortAssessment> assessments,
                                 std::span<const Timestamp> bt_times) {
  std::vector<Timestamp> times(bt_times.begin(), bt_times.end());
  std::sort(times.begin(), times.end());

  // BT times that have at least one linked assessment, and whether any is agitated.
  std::map<Timestamp, bool> linked;  // time -> calm so far
  if (!times.empty()) {
    for (const auto& a : assessments) {
      auto it = std::lower_bound(times.begin(), times.end(), a.timestamp);
      Timestamp nearest;
      if (it == times.end()) {
        nearest = times.back();
      } else if (it == times.begin()) {
        nearest = *it;
      } else {
        const Timestamp after = *it;
        const Timestamp before = *std::prev(it);
        // Equidistant readings link to the earlier one.
        nearest = (a.timestamp - before) <= (after - a.timestamp) ? before : after;
      }
      auto [slot, inserted] = linked.emplace(nearest, true);
      if (!is_calm(a)) slot->second = false;
    }
  }

  MovementGateResult result;
  for (const auto& p : pairs) {
    const auto it = linked.find(p.timestamp);
    if (it == linked.end()) {
      ++result.kept_without_assessment;
      result.kept.push_back(p);
    } else if (it->second) {
      result.kept.push_back(p);
    } else {
      ++result.removed;
    }
  }
  return result;
}

std::vector<ObservationPair> filter_hr_bounds(std::span<const ObservationPair> pairs) {
  std::vector<ObservationPair> out;
  for (const auto& p : pairs) {
    if (p.hr_bpm >= kMinHeartRate && p.hr_bpm <= kMaxHeartRate) out.push_back(p);
  }
  return out;
}

std::vector<RawPair> filter_hr_bounds(std::span<const RawPair> pairs) {
  std::vector<RawPair> out;
  for (const auto& p : pairs) {
    if (p.hr_bpm >= kMinHeartRate && p.hr_bpm <= kMaxHeartRate) out.push_back(p);
  }
  return out;
}

std::vector<ObservationPair> dedupe_per_patient_bucket(std::span<const ObservationPair> pairs) {
  std::map<std::pair<std::string_view, int>, const ObservationPair*> best;
  for (const auto& p : pairs) {
    const auto key = std::make_pair(std::string_view(p.patient), p.bucket.floor_celsius);
    auto [it, inserted] = best.emplace(key, &p);
    if (inserted) continue;
    const auto* cur = it->second;
    if (std::tie(p.timestamp, p.hr_bpm, p.bt_celsius) <
        std::tie(cur->timestamp, cur->hr_bpm, cur->bt_celsius)) {
      it->second = &p;
    }
  }
  std::vector<ObservationPair> out;
  out.reserve(best.size());
  for (const auto& [key, p] : best) out.push_back(*p);
  return out;
}

PipelineResult run_pipeline(std::span<const PatientRecord> records) {
  PipelineResult result;
  auto& audit = result.audit;
  std::vector<ObservationPair> candidates;
  std::map<std::string, AgeGroup, std::less<>> groups;

  for (const auto& rec : records) {
    if (rec.excluded) continue;
    groups.emplace(rec.patient, age_group(rec.age));

    std::vector<VitalSample> hr;
    std::vector<BtEvent> bt;
    for (const auto& s : rec.vitals) {
      if (!std::isfinite(s.value)) continue;
      if (s.kind == VitalKind::BodyTemperature) {
        ++audit.pairs_before;
        if (in_medication_window(s.timestamp, rec.medications)) {
          ++audit.removed_medication;
          continue;
        }
        const double v = s.site ? normalize_bt(s.value, *s.site) : s.value;
        bt.push_back({s.timestamp, v});
      } else if (!in_medication_window(s.timestamp, rec.medications)) {
        hr.push_back(s);
      }
    }
    std::stable_sort(hr.begin(), hr.end(),
                     [](const VitalSample& a, const VitalSample& b) { return a.timestamp < b.timestamp; });
    std::stable_sort(bt.begin(), bt.end(),
                     [](const BtEvent& a, const BtEvent& b) { return a.timestamp < b.timestamp; });

    const auto minutes = minute_medians(hr);
    const auto raw = pair_hr_bt(minutes, bt);
    audit.removed_unpaired += bt.size() - raw.size();

    std::vector<Timestamp> bt_times;
    bt_times.reserve(bt.size());
    for (const auto& e : bt) bt_times.push_back(e.timestamp);
    auto assessments = rec.assessments;
    std::stable_sort(assessments.begin(), assessments.end(),
                     [](const ComfortAssessment& a, const ComfortAssessment& b) {
                       return a.timestamp < b.timestamp;
                     });
    const auto gated = gate_movement(raw, assessments, bt_times);
    audit.removed_movement += gated.removed;
    audit.pairs_without_assessment += gated.kept_without_assessment;

    std::vector<RawPair> in_range;
    for (const auto& p : gated.kept) {
      if (bucket_of(p.bt_celsius)) {
        in_range.push_back(p);
      } else {
        ++audit.removed_bt_range;
      }
    }
    const auto bounded = filter_hr_bounds(in_range);
    audit.removed_hr_bounds += in_range.size() - bounded.size();

    const double months = rec.age.months();
    for (const auto& p : bounded) {
      candidates.push_back(ObservationPair::make(rec.patient, months, p.bt_celsius, p.hr_bpm, p.timestamp));
    }
  }

  result.pairs = dedupe_per_patient_bucket(candidates);
  audit.removed_dedupe = candidates.size() - result.pairs.size();
  audit.pairs_after = result.pairs.size();
  for (const auto& p : result.pairs) {
    const auto g = groups.find(p.patient)->second;
    ++audit.counts[static_cast<std::size_t>(p.bucket.floor_celsius - kMinBucket)][static_cast<std::size_t>(g)];
  }
  return result;
}

std::string format_audit(const PipelineAudit& audit) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "%-14s%9s%9s%9s%9s%10s%8s\n", "BT range (C)", "Newborn", "Infant",
                "Toddler", "Child", "Teenager", "Total");
  out += line;
  std::array<std::size_t, 5> col{};
  std::size_t grand = 0;
  for (int b = 0; b < kBucketCount; ++b) {
    const auto& row = audit.counts[static_cast<std::size_t>(b)];
    std::size_t total = 0;
    for (std::size_t g = 0; g < 5; ++g) {
      total += row[g];
      col[g] += row[g];
    }
    grand += total;
    char label[32];
    std::snprintf(label, sizeof label, "%d-%d.9", kMinBucket + b, kMinBucket + b);
    std::snprintf(line, sizeof line, "%-14s%9zu%9zu%9zu%9zu%10zu%8zu\n", label, row[0], row[1], row[2],
                  row[3], row[4], total);
    out += line;
  }
  std::snprintf(line, sizeof line, "%-14s%9zu%9zu%9zu%9zu%10zu%8zu\n", "Total", col[0], col[1], col[2],
                col[3], col[4], grand);
  out += line;
  out += '\n';
  const std::pair<const char*, std::size_t> counters[] = {
      {"pairs_before", audit.pairs_before},
      {"removed_medication", audit.removed_medication},
      {"removed_unpaired", audit.removed_unpaired},
      {"removed_movement", audit.removed_movement},
      {"removed_bt_range", audit.removed_bt_range},
      {"removed_hr_bounds", audit.removed_hr_bounds},
      {"removed_dedupe", audit.removed_dedupe},
      {"pairs_after", audit.pairs_after},
      {"pairs_without_assessment", audit.pairs_without_assessment},
  };
  for (const auto& [name, value] : counters) {
    std::snprintf(line, sizeof line, "%-26s%zu\n", name, value);
    out += line;
  }
  return out;
}

}  // namespace vqr
