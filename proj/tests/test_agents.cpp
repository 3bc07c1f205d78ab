#include <gtest/gtest.h>

#include "sotc/agents.hpp"

using namespace sotc;

namespace {

IntersectionState green_state(Action a, int green_elapsed = 0, int red_other = 0) {
  IntersectionState s;
  s.action = a;
  s.phase = Phase::Green;
  s.green_elapsed_s = green_elapsed;
  s.red_elapsed_s[static_cast<std::size_t>(index_of(other(a)))] = red_other;
  return s;
}

NetworkConfig one_intersection() {
  NetworkConfig c;
  c.grid_size = 1;
  return c;
}

}  // namespace

TEST(Controllers, NamesRoundTrip) {
  for (auto k : kAllControllers) EXPECT_EQ(parse_controller(to_string(k)), k);
  EXPECT_EQ(parse_controller("soc-2m"), ControllerKind::SOC_2M);
  EXPECT_EQ(parse_controller("soc2"), ControllerKind::SOC_2);
  EXPECT_THROW(parse_controller("SOC_3"), std::invalid_argument);
  EXPECT_FALSE(is_soc_family(ControllerKind::SOTL));
  EXPECT_TRUE(uses_interval_model(ControllerKind::SOC_M));
  EXPECT_FALSE(uses_interval_model(ControllerKind::SOC));
}

TEST(Agent, NothingDecidedDuringSetup) {
  for (auto k : kAllControllers) {
    Network net(one_intersection());
    net.switch_to(0, Action::WE);
    Agent agent(k, 0, net, {}, Scenario::RVD);
    const auto d = agent.decide(net);
    EXPECT_FALSE(d.is_switch()) << to_string(k);
    EXPECT_FALSE(agent.last_green_upper()[0]);
  }
}

TEST(Agent, CriticalWindowForcesService) {
  for (auto k : {ControllerKind::SOC, ControllerKind::SOC_2, ControllerKind::SOC_M, ControllerKind::SOC_2M}) {
    Network net(one_intersection());
    net.set_signal(0, green_state(Action::NS, 130, 120));
    Agent agent(k, 0, net, {}, Scenario::RVD);
    const auto d = agent.decide(net);
    EXPECT_TRUE(d.is_switch()) << to_string(k);
    EXPECT_TRUE(d.forced) << to_string(k);
    EXPECT_EQ(d.target, Action::WE);
  }
}

TEST(Agent, EmptyApproachesKeepCurrent) {
  for (auto k : {ControllerKind::SOC, ControllerKind::SOC_2, ControllerKind::SOC_M, ControllerKind::SOC_2M}) {
    Network net(one_intersection());
    net.set_signal(0, green_state(Action::NS, 10, 10));
    Agent agent(k, 0, net, {}, Scenario::RVD);
    EXPECT_FALSE(agent.decide(net).is_switch()) << to_string(k);
  }
}

TEST(Agent, EmptyLanesCostNothing) {
  Network net(one_intersection());
  Agent agent(ControllerKind::SOC_2M, 0, net, {}, Scenario::RVD);
  EXPECT_EQ(agent.interval_cost(Action::NS, Action::NS), Interval(0, 0));
  EXPECT_EQ(agent.interval_cost(Action::WE, Action::NS), Interval(0, 0));
}

TEST(Agent, QueueOnRedWithEmptyGreenSwitches) {
  for (auto k : {ControllerKind::SOC, ControllerKind::SOC_2, ControllerKind::SOC_M, ControllerKind::SOC_2M}) {
    Network net(one_intersection());
    net.set_signal(0, green_state(Action::NS, 20, 20));
    Agent agent(k, 0, net, {}, Scenario::VSN);
    const int east = net.link_id(Direction::East, 0, 0);
    for (int c = 39; c > 33; --c) net.place_vehicle(east, c, 0, VehicleClass::Fast);
    agent.observe(net, observe(net, Scenario::VSN));
    const auto d = agent.decide(net);
    EXPECT_TRUE(d.is_switch()) << to_string(k);
    EXPECT_FALSE(d.forced) << to_string(k);
    EXPECT_EQ(d.target, Action::WE) << to_string(k);
  }
}

TEST(Agent, PlansCoverTheHorizon) {
  Network net(one_intersection());
  ControlParams p;
  Agent agent(ControllerKind::SOC_2M, 0, net, p, Scenario::RVD);
  const auto keep = agent.plans_for(Action::NS, Action::NS);
  const auto sw = agent.plans_for(Action::WE, Action::NS);
  ASSERT_EQ(keep.size(), 4u);
  const std::size_t len = static_cast<std::size_t>(p.h_green_s + p.tau_s + 1);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(keep[k].size(), len);
    EXPECT_EQ(sw[k].size(), len);
  }
  // approaches: E, W serve WE; S, N serve NS
  EXPECT_EQ(keep[2], SignalPlan(len, true));
  EXPECT_EQ(keep[0], SignalPlan(len, false));
  EXPECT_EQ(sw[2], SignalPlan(len, false));
  EXPECT_EQ(sw[0], red_then_green(p.tau_s, static_cast<int>(len) - 1));
}

TEST(Agent, PerLaneHorizonsFollowCurrentSignal) {
  Network net(one_intersection());
  ControlParams p;
  p.horizon = HorizonMode::PerLane;
  Agent agent(ControllerKind::SOC_2M, 0, net, p, Scenario::RVD);
  const auto keep = agent.plans_for(Action::NS, Action::NS);
  EXPECT_EQ(keep[2].size(), static_cast<std::size_t>(p.h_green_s + 1));
  EXPECT_EQ(keep[0].size(), static_cast<std::size_t>(p.h_green_s + p.tau_s + 1));
  p.horizon = HorizonMode::PerAction;
  Agent per_action(ControllerKind::SOC_2M, 0, net, p, Scenario::RVD);
  EXPECT_EQ(per_action.plans_for(Action::NS, Action::NS)[0].size(), static_cast<std::size_t>(p.h_green_s + 1));
  EXPECT_EQ(per_action.plans_for(Action::WE, Action::NS)[2].size(),
            static_cast<std::size_t>(p.h_green_s + p.tau_s + 1));
}

TEST(Agent, RvdImageFollowsDetections) {
  NetworkConfig cfg = one_intersection();
  cfg.q = 900;
  cfg.f = 0.3;
  Network net(cfg);
  Agent agent(ControllerKind::SOC_2M, 0, net, {}, Scenario::RVD);
  RunRng rng(4);
  for (int t = 0; t < 600; ++t) {
    net.step(rng);
    net.spawn(rng);
    agent.observe(net, observe(net, Scenario::RVD));
    const auto d = agent.decide(net);
    if (d.is_switch()) net.switch_to(0, d.target);
    const auto app = net.approaches(0);
    for (std::size_t k = 0; k < 4; ++k) {
      int truth = 0;
      for (int id : net.link(app[k]).cells) truth += id != Link::kEmpty;
      ASSERT_EQ(static_cast<int>(agent.interval_model().lane(k).size()), truth) << "t=" << t << " lane " << k;
    }
  }
  EXPECT_EQ(agent.interval_model().unmatched(), 0);
}

// --- SOTL -----------------------------------------------------------------------

namespace {

struct SotlFixture {
  Network net{one_intersection()};
  Agent agent{ControllerKind::SOTL, 0, net, {}, Scenario::RVD};

  SotlFixture(int green_elapsed, int kappa, int near_green) {
    net.set_signal(0, green_state(Action::NS, green_elapsed, green_elapsed));
    // one vehicle in the far band of the red east approach
    net.place_vehicle(net.link_id(Direction::East, 0, 0), 35, 0, VehicleClass::Fast);
    // near-band vehicles alternate between the two green approaches
    const int south = net.link_id(Direction::South, 0, 0);
    const int north = net.link_id(Direction::North, 0, 0);
    for (int i = 0; i < near_green; ++i) net.place_vehicle(i % 2 ? north : south, 39 - i / 2, 0, VehicleClass::Fast);
    for (int i = 0; i < kappa; ++i) agent.observe(net, {});
  }
};

}  // namespace

TEST(Sotl, BelowThresholdKeeps) {
  SotlFixture f(10, 49, 0);
  EXPECT_EQ(f.agent.sotl_counters()[0], 49);
  EXPECT_FALSE(f.agent.decide(f.net).is_switch());
}

TEST(Sotl, ThresholdSwitches) {
  SotlFixture f(5, 50, 0);
  const auto d = f.agent.decide(f.net);
  EXPECT_TRUE(d.is_switch());
  EXPECT_EQ(d.target, Action::WE);
}

TEST(Sotl, MinimumGreenHolds) {
  SotlFixture f(4, 80, 0);
  EXPECT_FALSE(f.agent.decide(f.net).is_switch());
}

TEST(Sotl, PlatoonOnGreenHolds) {
  SotlFixture f(10, 80, 2);
  EXPECT_FALSE(f.agent.decide(f.net).is_switch());
}

TEST(Sotl, LargePlatoonIsSplit) {
  SotlFixture f(10, 80, 4);
  EXPECT_TRUE(f.agent.decide(f.net).is_switch());
}

TEST(Sotl, CounterResetsWhileGreen) {
  SotlFixture f(10, 10, 0);
  EXPECT_EQ(f.agent.sotl_counters()[2], 0);
  EXPECT_EQ(f.agent.sotl_counters()[3], 0);
  f.net.set_signal(0, green_state(Action::WE, 0, 0));
  f.agent.observe(f.net, {});
  EXPECT_EQ(f.agent.sotl_counters()[0], 0);
}

// --- SOC point model --------------------------------------------------------------

TEST(PointModel, QueueAndApproach) {
  PointApproachModel m(1, 40, 1.5);
  m.insert_rear(0, 0);
  for (int t = 0; t < 30; ++t) m.advance();
  EXPECT_EQ(m.queued(0), 1);
  EXPECT_FALSE(m.furthest_distance(0));
  m.insert_rear(0, 0);
  EXPECT_EQ(m.queued(0), 1);
  ASSERT_TRUE(m.furthest_distance(0));
  EXPECT_EQ(*m.furthest_distance(0), 40);
  EXPECT_EQ(m.arriving_within(0, 10), 1);
  EXPECT_EQ(m.arriving_within(0, 26), 2);
  EXPECT_TRUE(m.remove_front(0));
  EXPECT_EQ(m.count(0), 1u);
}
