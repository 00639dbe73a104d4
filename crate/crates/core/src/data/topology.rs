use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The five part streams every skeleton is reduced to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BodyPart {
    Torso,
    LeftArm,
    RightArm,
    LeftLeg,
    RightLeg,
}

pub const PART_COUNT: usize = 5;

impl BodyPart {
    pub const ALL: [BodyPart; PART_COUNT] = [
        BodyPart::Torso,
        BodyPart::LeftArm,
        BodyPart::RightArm,
        BodyPart::LeftLeg,
        BodyPart::RightLeg,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_upper(self) -> bool {
        matches!(self, BodyPart::Torso | BodyPart::LeftArm | BodyPart::RightArm)
    }

    pub fn label(self) -> &'static str {
        match self {
            BodyPart::Torso => "torso",
            BodyPart::LeftArm => "left arm",
            BodyPart::RightArm => "right arm",
            BodyPart::LeftLeg => "left leg",
            BodyPart::RightLeg => "right leg",
        }
    }
}

/// Joint → body-part assignment for one skeleton layout.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkeletonTopology {
    part_map: Vec<BodyPart>,
}

use BodyPart::*;

// KIT-ML 21-joint order: root, spine ×3 + head, right arm (5-7), left arm
// (8-10), right leg (11-15), left leg (16-20).
const KIT21: [BodyPart; 21] = [
    Torso, Torso, Torso, Torso, Torso, RightArm, RightArm, RightArm, LeftArm, LeftArm, LeftArm,
    RightLeg, RightLeg, RightLeg, RightLeg, RightLeg, LeftLeg, LeftLeg, LeftLeg, LeftLeg, LeftLeg,
];

// SMPL 22-joint order used by HumanML3D.
const SMPL22: [BodyPart; 22] = [
    Torso, LeftLeg, RightLeg, Torso, LeftLeg, RightLeg, Torso, LeftLeg, RightLeg, Torso, LeftLeg,
    RightLeg, Torso, LeftArm, RightArm, Torso, LeftArm, RightArm, LeftArm, RightArm, LeftArm,
    RightArm,
];

impl SkeletonTopology {
    pub fn new(part_map: Vec<BodyPart>) -> Result<Self> {
        if part_map.is_empty() {
            return Err(Error::Invalid("topology needs at least one joint".into()));
        }
        for part in BodyPart::ALL {
            if !part_map.contains(&part) {
                return Err(Error::Invalid(format!(
                    "body part `{}` has no joints",
                    part.label()
                )));
            }
        }
        Ok(SkeletonTopology { part_map })
    }

    /// 21-joint KIT Motion-Language layout.
    pub fn kit21() -> Self {
        SkeletonTopology {
            part_map: KIT21.to_vec(),
        }
    }

    /// 22-joint SMPL layout (HumanML3D).
    pub fn smpl22() -> Self {
        SkeletonTopology {
            part_map: SMPL22.to_vec(),
        }
    }

    /// Looks up a named preset, `"kit21"` or `"smpl22"`.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "kit21" | "kit" => Ok(Self::kit21()),
            "smpl22" | "humanml3d" => Ok(Self::smpl22()),
            other => Err(Error::Invalid(format!(
                "unknown topology preset `{other}`; supply an explicit part map"
            ))),
        }
    }

    /// Picks the preset matching a joint count.
    pub fn for_joint_count(j: usize) -> Result<Self> {
        match j {
            21 => Ok(Self::kit21()),
            22 => Ok(Self::smpl22()),
            _ => Err(Error::Invalid(format!(
                "no preset topology for {j} joints; supply an explicit part map"
            ))),
        }
    }

    pub fn joint_count(&self) -> usize {
        self.part_map.len()
    }

    pub fn part_of(&self, joint: usize) -> BodyPart {
        self.part_map[joint]
    }

    pub fn part_map(&self) -> &[BodyPart] {
        &self.part_map
    }

    pub fn joints_of(&self, part: BodyPart) -> impl Iterator<Item = usize> + '_ {
        self.part_map
            .iter()
            .enumerate()
            .filter(move |(_, p)| **p == part)
            .map(|(j, _)| j)
    }
}
