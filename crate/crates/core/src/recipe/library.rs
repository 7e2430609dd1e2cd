//! Recipes and matching detected ingredients to them.

use crate::detection::normalize_label;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::path::Path;

/// Matches covering less than this share of a recipe's ingredients are ignored.
pub const MATCH_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub summary: String,
    /// Times and weights.
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recipe {
    pub id: String,
    pub title: String,
    pub ingredients: Vec<String>,
    pub steps: Vec<Step>,
}

#[derive(Debug, thiserror::Error)]
pub enum RecipeError {
    #[error("reading recipe library: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing recipe library: {0}")]
    Json(#[from] serde_json::Error),
    #[error("recipe {id}: {reason}")]
    Invalid { id: String, reason: String },
    #[error("recipe id {0} appears twice")]
    DuplicateId(String),
}

impl Recipe {
    pub fn validate(&self) -> Result<(), RecipeError> {
        let invalid = |reason: String| RecipeError::Invalid {
            id: self.id.clone(),
            reason,
        };
        if self.id.trim().is_empty() {
            return Err(invalid("empty id".into()));
        }
        if self.steps.is_empty() {
            return Err(invalid("no steps".into()));
        }
        if let Some(i) = self.steps.iter().position(|s| s.summary.trim().is_empty()) {
            return Err(invalid(format!("step {i} has an empty summary")));
        }
        if self.ingredients.is_empty() {
            return Err(invalid("no ingredients".into()));
        }
        for ing in &self.ingredients {
            if normalize_label(ing).as_deref() != Some(ing.as_str()) {
                return Err(invalid(format!("ingredient {ing:?} is not canonical")));
            }
        }
        let unique: BTreeSet<&String> = self.ingredients.iter().collect();
        if unique.len() != self.ingredients.len() {
            return Err(invalid("repeated ingredient".into()));
        }
        Ok(())
    }
}

/// A validated set of recipes with unique ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RecipeLibrary {
    recipes: Vec<Recipe>,
}

impl RecipeLibrary {
    pub fn new(recipes: Vec<Recipe>) -> Result<Self, RecipeError> {
        let mut ids = BTreeSet::new();
        for r in &recipes {
            r.validate()?;
            if !ids.insert(r.id.clone()) {
                return Err(RecipeError::DuplicateId(r.id.clone()));
            }
        }
        Ok(Self { recipes })
    }

    pub fn from_json(text: &str) -> Result<Self, RecipeError> {
        Self::new(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, RecipeError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// The library shipped with the repository.
    pub fn bundled() -> Self {
        Self::from_json(include_str!("../../fixtures/recipes.json")).expect("bundled library is valid")
    }

    pub fn recipes(&self) -> &[Recipe] {
        &self.recipes
    }

    pub fn get(&self, id: &str) -> Option<&Recipe> {
        self.recipes.iter().find(|r| r.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchScore {
    pub recipe_id: String,
    pub covered: usize,
    pub missing: usize,
    /// Detected labels the recipe does not use.
    pub extra: usize,
    pub score: f64,
}

impl MatchScore {
    pub fn of(recipe: &Recipe, detected: &BTreeSet<&str>) -> Self {
        let covered = recipe
            .ingredients
            .iter()
            .filter(|i| detected.contains(i.as_str()))
            .count();
        let total = recipe.ingredients.len();
        let extra = detected
            .iter()
            .filter(|d| !recipe.ingredients.iter().any(|i| i == *d))
            .count();
        Self {
            recipe_id: recipe.id.clone(),
            covered,
            missing: total - covered,
            extra,
            score: covered as f64 / total as f64,
        }
    }

    /// Exact comparison of `covered / (covered + missing)`.
    fn cmp_score(&self, other: &Self) -> Ordering {
        let a = self.covered * (other.covered + other.missing);
        let b = other.covered * (self.covered + self.missing);
        a.cmp(&b)
    }

    fn meets_threshold(&self) -> bool {
        // covered / total >= 1/2
        2 * self.covered >= self.covered + self.missing
    }
}

/// Best-covered recipe; ties go to fewer extras, then the smaller id.
pub fn match_recipe<S: AsRef<str>>(detected: &[S], library: &RecipeLibrary) -> Option<MatchScore> {
    let set: BTreeSet<&str> = detected.iter().map(|s| s.as_ref()).collect();
    library
        .recipes()
        .iter()
        .map(|r| MatchScore::of(r, &set))
        .filter(|m| m.covered > 0 && m.meets_threshold())
        .min_by(|a, b| {
            b.cmp_score(a)
                .then(a.extra.cmp(&b.extra))
                .then_with(|| a.recipe_id.cmp(&b.recipe_id))
        })
}
