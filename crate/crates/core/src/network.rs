use crate::error::{Error, Result};
use crate::model::{DecisionFunction, DiscreteObservationModel, Priors};

/// A chain of `N` decision makers. DMs `1..N-1` carry an explicit decision
/// function; DM `N` is the fusion center and always applies the MAP rule to
/// its own observation and the incoming message.
#[derive(Debug, Clone, PartialEq)]
pub struct TandemNetwork {
    priors: Priors,
    observations: Vec<DiscreteObservationModel>,
    decisions: Vec<DecisionFunction>,
}

impl TandemNetwork {
    pub fn new(
        priors: Priors,
        observations: Vec<DiscreteObservationModel>,
        decisions: Vec<DecisionFunction>,
    ) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::InvalidNetwork("network needs at least one DM".into()));
        }
        if decisions.len() + 1 != observations.len() {
            return Err(Error::InvalidNetwork(format!(
                "{} observation models need {} decision functions, got {}",
                observations.len(),
                observations.len() - 1,
                decisions.len()
            )));
        }
        for (k, obs) in observations.iter().enumerate() {
            if obs.hypotheses() != priors.len() {
                return Err(Error::InvalidNetwork(format!(
                    "DM {} observes {} hypotheses, priors have {}",
                    k + 1,
                    obs.hypotheses(),
                    priors.len()
                )));
            }
        }
        let net = Self { priors, observations, decisions };
        for l in 1..net.dms() {
            net.check_decision(l, &net.decisions[l - 1])?;
        }
        Ok(net)
    }

    fn check_decision(&self, l: usize, gamma: &DecisionFunction) -> Result<()> {
        let expected_in = if l == 1 { 1 } else { self.decisions[l - 2].out_msg() };
        if gamma.in_msg() != expected_in {
            return Err(Error::InvalidNetwork(format!(
                "DM {l} accepts {} messages but its predecessor emits {expected_in}",
                gamma.in_msg()
            )));
        }
        if gamma.in_obs() != self.observations[l - 1].alphabet_size() {
            return Err(Error::InvalidNetwork(format!(
                "DM {l} table covers {} observations, model has {}",
                gamma.in_obs(),
                self.observations[l - 1].alphabet_size()
            )));
        }
        if l + 1 < self.dms() && gamma.out_msg() != self.decisions[l].in_msg() {
            return Err(Error::InvalidNetwork(format!(
                "DM {l} emits {} messages but DM {} accepts {}",
                gamma.out_msg(),
                l + 1,
                self.decisions[l].in_msg()
            )));
        }
        Ok(())
    }

    /// Number of decision makers `N`, fusion center included.
    pub fn dms(&self) -> usize {
        self.observations.len()
    }

    pub fn hypotheses(&self) -> usize {
        self.priors.len()
    }

    pub fn priors(&self) -> &Priors {
        &self.priors
    }

    /// Observation model of DM `l` (1-based).
    pub fn observation(&self, l: usize) -> &DiscreteObservationModel {
        &self.observations[l - 1]
    }

    pub fn fusion_observation(&self) -> &DiscreteObservationModel {
        self.observations.last().expect("non-empty")
    }

    /// Decision function of DM `l`, `1 <= l <= N-1`.
    pub fn decision(&self, l: usize) -> &DecisionFunction {
        &self.decisions[l - 1]
    }

    pub fn decisions(&self) -> &[DecisionFunction] {
        &self.decisions
    }

    /// Size of the message alphabet on the link out of DM `l`.
    pub fn message_alphabet(&self, l: usize) -> usize {
        self.decisions[l - 1].out_msg()
    }

    /// Replaces DM `l`'s table; alphabets must match the surrounding chain.
    pub fn set_decision(&mut self, l: usize, gamma: DecisionFunction) -> Result<()> {
        if l == 0 || l >= self.dms() {
            return Err(Error::InvalidArgument(format!(
                "DM {l} has no decision table in a network of {} DMs",
                self.dms()
            )));
        }
        self.check_decision(l, &gamma)?;
        self.decisions[l - 1] = gamma;
        Ok(())
    }
}
